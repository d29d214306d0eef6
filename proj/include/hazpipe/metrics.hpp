#pragma once

#include <set>
#include <string>
#include <vector>

#include "hazpipe/hazards.hpp"
#include "hazpipe/reaction.hpp"
#include "hazpipe/types.hpp"

namespace hazpipe {

struct Accuracies {
    double reaction = 0.0;
    double detection = 0.0;
    double classification = 0.0;
    double macro = 0.0;
};

struct VideoEval {
    std::string video_id;
    Accuracies acc;
};

struct EvalReport {
    std::vector<VideoEval> videos;
    Accuracies overall;  // unweighted mean over videos
};

/// Fraction of frames where the predicted reaction flag equals the truth.
double reaction_accuracy(const std::vector<bool>& predicted, const std::vector<bool>& truth);
double reaction_accuracy(const ReactionSeries& predicted, const GroundTruth& truth);

/**
 * Per frame |H ∩ Ĥ| / |H|, averaged. Frames with empty truth score 1 when
 * the prediction is also empty and are excluded from the average otherwise;
 * an average over zero counted frames is 0.
 */
double detection_accuracy(const std::vector<std::set<std::string>>& predicted,
                          const std::vector<std::set<std::string>>& truth);
double detection_accuracy(const HazardSelection& predicted, const GroundTruth& truth);

/**
 * Per frame |C ∩ Ĉ| / |C| over normalized token sets (tokenize applied to
 * both sides), with the same empty-truth convention as detection_accuracy.
 */
double classification_accuracy(const std::vector<std::set<std::string>>& predicted_tokens,
                               const std::vector<std::set<std::string>>& truth_classes);
double classification_accuracy(const HazardSelection& predicted, const GroundTruth& truth);

double macro_accuracy(double reaction, double detection, double classification);

Accuracies evaluate_video(const ReactionSeries& reaction, const HazardSelection& hazards,
                          const GroundTruth& truth);

EvalReport combine_reports(std::vector<VideoEval> videos);

std::string eval_report_json(const EvalReport& report);
std::string eval_report_csv(const EvalReport& report);

}  // namespace hazpipe
