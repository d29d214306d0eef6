#include "hazpipe/metrics.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "hazpipe/captions.hpp"
#include "hazpipe/errors.hpp"
#include "hazpipe/util.hpp"

using nlohmann::json;

namespace hazpipe {

namespace {

void require_equal_length(size_t a, size_t b, const char* what) {
    if (a != b) {
        std::ostringstream msg;
        msg << what << ": prediction has " << a << " frames, truth has " << b;
        throw ValidationError(msg.str());
    }
}

double set_overlap_accuracy(const std::vector<std::set<std::string>>& predicted,
                            const std::vector<std::set<std::string>>& truth) {
    require_equal_length(predicted.size(), truth.size(), "set accuracy");
    double sum = 0.0;
    int counted = 0;
    for (size_t i = 0; i < truth.size(); ++i) {
        if (truth[i].empty()) {
            // Empty-truth frames: credit an empty prediction, skip otherwise
            // so spurious picks are not rewarded.
            if (predicted[i].empty()) {
                sum += 1.0;
                ++counted;
            }
            continue;
        }
        int inter = 0;
        for (const auto& item : predicted[i]) inter += truth[i].count(item) ? 1 : 0;
        sum += static_cast<double>(inter) / static_cast<double>(truth[i].size());
        ++counted;
    }
    return counted == 0 ? 0.0 : sum / static_cast<double>(counted);
}

std::set<std::string> tokens_of_set(const std::set<std::string>& items) {
    std::set<std::string> out;
    for (const auto& item : items)
        for (auto& token : tokenize(item)) out.insert(std::move(token));
    return out;
}

}  // namespace

double reaction_accuracy(const std::vector<bool>& predicted, const std::vector<bool>& truth) {
    require_equal_length(predicted.size(), truth.size(), "reaction accuracy");
    if (truth.empty()) return 1.0;
    int matches = 0;
    for (size_t i = 0; i < truth.size(); ++i) matches += predicted[i] == truth[i] ? 1 : 0;
    return static_cast<double>(matches) / static_cast<double>(truth.size());
}

double reaction_accuracy(const ReactionSeries& predicted, const GroundTruth& truth) {
    return reaction_accuracy(predicted.values(), truth.reaction);
}

double detection_accuracy(const std::vector<std::set<std::string>>& predicted,
                          const std::vector<std::set<std::string>>& truth) {
    return set_overlap_accuracy(predicted, truth);
}

double detection_accuracy(const HazardSelection& predicted, const GroundTruth& truth) {
    std::vector<std::set<std::string>> tracks(predicted.per_frame.size());
    for (size_t i = 0; i < predicted.per_frame.size(); ++i)
        for (const auto& entry : predicted.per_frame[i]) tracks[i].insert(entry.track_id);
    return set_overlap_accuracy(tracks, truth.hazard_tracks);
}

double classification_accuracy(const std::vector<std::set<std::string>>& predicted_tokens,
                               const std::vector<std::set<std::string>>& truth_classes) {
    std::vector<std::set<std::string>> pred(predicted_tokens.size());
    std::vector<std::set<std::string>> truth(truth_classes.size());
    for (size_t i = 0; i < predicted_tokens.size(); ++i) pred[i] = tokens_of_set(predicted_tokens[i]);
    for (size_t i = 0; i < truth_classes.size(); ++i) truth[i] = tokens_of_set(truth_classes[i]);
    return set_overlap_accuracy(pred, truth);
}

double classification_accuracy(const HazardSelection& predicted, const GroundTruth& truth) {
    std::vector<std::set<std::string>> labels(predicted.per_frame.size());
    for (size_t i = 0; i < predicted.per_frame.size(); ++i)
        for (const auto& entry : predicted.per_frame[i])
            if (!entry.label.empty()) labels[i].insert(entry.label);
    return classification_accuracy(labels, truth.hazard_classes);
}

double macro_accuracy(double reaction, double detection, double classification) {
    return (reaction + detection + classification) / 3.0;
}

Accuracies evaluate_video(const ReactionSeries& reaction, const HazardSelection& hazards,
                          const GroundTruth& truth) {
    Accuracies acc;
    acc.reaction = reaction_accuracy(reaction, truth);
    acc.detection = detection_accuracy(hazards, truth);
    acc.classification = classification_accuracy(hazards, truth);
    acc.macro = macro_accuracy(acc.reaction, acc.detection, acc.classification);
    return acc;
}

EvalReport combine_reports(std::vector<VideoEval> videos) {
    std::sort(videos.begin(), videos.end(),
              [](const VideoEval& a, const VideoEval& b) { return a.video_id < b.video_id; });
    EvalReport report;
    report.videos = std::move(videos);
    if (report.videos.empty()) return report;
    for (const auto& v : report.videos) {
        report.overall.reaction += v.acc.reaction;
        report.overall.detection += v.acc.detection;
        report.overall.classification += v.acc.classification;
    }
    const double n = static_cast<double>(report.videos.size());
    report.overall.reaction /= n;
    report.overall.detection /= n;
    report.overall.classification /= n;
    report.overall.macro = macro_accuracy(report.overall.reaction, report.overall.detection,
                                          report.overall.classification);
    return report;
}

namespace {

json accuracies_to_json(const Accuracies& acc) {
    return {{"a_reaction", acc.reaction},
            {"a_detection", acc.detection},
            {"a_classific", acc.classification},
            {"a_macro", acc.macro}};
}

}  // namespace

std::string eval_report_json(const EvalReport& report) {
    json jvideos = json::array();
    for (const auto& v : report.videos) {
        json entry = accuracies_to_json(v.acc);
        entry["video_id"] = v.video_id;
        jvideos.push_back(std::move(entry));
    }
    return json{{"videos", std::move(jvideos)}, {"overall", accuracies_to_json(report.overall)}}
        .dump(2);
}

std::string eval_report_csv(const EvalReport& report) {
    std::ostringstream out;
    out << "video_id,a_reaction,a_detection,a_classific,a_macro\n";
    for (const auto& v : report.videos) {
        out << v.video_id << "," << format_double(v.acc.reaction) << ","
            << format_double(v.acc.detection) << "," << format_double(v.acc.classification) << ","
            << format_double(v.acc.macro) << "\n";
    }
    out << "overall," << format_double(report.overall.reaction) << ","
        << format_double(report.overall.detection) << ","
        << format_double(report.overall.classification) << ","
        << format_double(report.overall.macro) << "\n";
    return out.str();
}

}  // namespace hazpipe
