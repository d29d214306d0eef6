#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "hazpipe/types.hpp"

namespace hazpipe {

/// Top-k class probabilities for one (track, frame) crop.
struct ClassPrediction {
    std::string video_id;
    std::string track_id;
    int frame_index = 0;
    std::vector<std::pair<std::string, double>> topk;  // label, probability
};

/// Area-weighted class totals of one track and the winning class.
struct TrackClassScore {
    std::string track_id;
    std::map<std::string, double> scores;
    std::string argmax;
};

/// Class labels regarded as ordinary traffic; anything else is a hazard.
struct Whitelist {
    std::set<std::string> labels;  // normalized

    static Whitelist standard_traffic();
    static Whitelist from_labels(const std::vector<std::string>& raw);
    bool contains(const std::string& label) const;
    bool empty() const { return labels.empty(); }
};

/// One selected hazard: the track and, once classified, its label.
struct HazardEntry {
    std::string track_id;
    std::string label;  // empty until a filter or captioner attaches one
};

/// Per-frame ordered hazard picks of one video.
struct HazardSelection {
    std::string video_id;
    std::vector<std::vector<HazardEntry>> per_frame;

    int frame_count() const { return static_cast<int>(per_frame.size()); }
};

/**
 * Per frame, the k detections whose bbox centers are nearest the frame
 * center, ascending by distance (ties by track id). Frames with fewer than k
 * detections select all of them.
 */
HazardSelection nearest_k_tracks(const VideoAnnotations& video, int k);

/// Every detection of every frame, ordered by track id.
HazardSelection all_tracks(const VideoAnnotations& video);

/**
 * Area weighting: a track's score for class c sums, over the frames it
 * appears in, the class probability times the bbox area there.
 * The argmax class breaks ties toward the lexicographically smaller label.
 * Throws ValidationError when a prediction has no matching detection.
 */
std::vector<TrackClassScore> area_weighted_scores(const std::vector<ClassPrediction>& predictions,
                                                  const std::vector<Tracklet>& tracklets);

/**
 * Drop selected tracks whose argmax class is whitelisted; everything else is
 * kept with the argmax label attached. Tracks without any score stay
 * selected: missing evidence must not suppress a potential hazard.
 */
HazardSelection whitelist_filter(const HazardSelection& selection,
                                 const std::vector<TrackClassScore>& scores,
                                 const Whitelist& whitelist);

/// Box-size statistic used by the trajectory filter.
enum class TrajectoryBoxStat { Mean, Max };
/// Comparator combining the per-track width/height statistics.
enum class TrajectoryComparator { Max, Min };

/**
 * Drop tracks whose net displacement (first to last bbox center) is smaller
 * than their box size: displacement < comparator(W, H) where W and H are the
 * chosen statistic of box width/height over the track's detections.
 */
HazardSelection trajectory_size_filter(const HazardSelection& selection,
                                       const std::vector<Tracklet>& tracklets,
                                       TrajectoryComparator comparator = TrajectoryComparator::Max,
                                       TrajectoryBoxStat box_stat = TrajectoryBoxStat::Mean);

/// Hazard-selection strategy as exposed in the CLI config.
struct HazardConfig {
    enum class Base { AllTracks, NearestK };
    Base base = Base::AllTracks;
    int k = 1;
    bool whitelist_enabled = false;
    Whitelist whitelist = Whitelist::standard_traffic();
    bool size_filter_enabled = false;
    TrajectoryComparator comparator = TrajectoryComparator::Max;
    TrajectoryBoxStat box_stat = TrajectoryBoxStat::Mean;
};

/// Base strategy, then the whitelist filter, then the size filter.
HazardSelection select_hazards(const VideoAnnotations& video, const HazardConfig& config,
                               const std::vector<ClassPrediction>& predictions);

/// JSONL ingestion of per-(track, frame) predictions, with schema checks.
std::vector<ClassPrediction> parse_predictions_jsonl(const std::string& path);
void write_predictions_jsonl(const std::vector<ClassPrediction>& predictions,
                             const std::string& path);

}  // namespace hazpipe
