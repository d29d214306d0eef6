#include "hazpipe/hazards.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hazpipe/annotations_io.hpp"
#include "hazpipe/errors.hpp"
#include "hazpipe/util.hpp"

using nlohmann::json;

namespace hazpipe {

Whitelist Whitelist::standard_traffic() {
    return from_labels({"pickup truck", "bus", "tank", "motorcycle", "cloud"});
}

Whitelist Whitelist::from_labels(const std::vector<std::string>& raw) {
    Whitelist w;
    for (const auto& label : raw) w.labels.insert(normalize_label(label));
    return w;
}

bool Whitelist::contains(const std::string& label) const {
    return labels.count(normalize_label(label)) > 0;
}

HazardSelection nearest_k_tracks(const VideoAnnotations& video, int k) {
    if (k < 1) throw ValidationError("nearest_k_tracks needs k >= 1");
    const double cx = video.width / 2.0;
    const double cy = video.height / 2.0;
    HazardSelection out{video.video_id, {}};
    out.per_frame.resize(video.frames.size());
    for (size_t fi = 0; fi < video.frames.size(); ++fi) {
        const auto& dets = video.frames[fi].detections;
        std::vector<std::pair<double, const Detection*>> ranked;
        ranked.reserve(dets.size());
        for (const auto& det : dets) {
            const auto [x, y] = det.bbox.center();
            ranked.emplace_back(std::hypot(x - cx, y - cy), &det);
        }
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first < b.first;
            return a.second->track_id < b.second->track_id;
        });
        const size_t take = std::min(ranked.size(), static_cast<size_t>(k));
        for (size_t i = 0; i < take; ++i)
            out.per_frame[fi].push_back({ranked[i].second->track_id, {}});
    }
    return out;
}

HazardSelection all_tracks(const VideoAnnotations& video) {
    HazardSelection out{video.video_id, {}};
    out.per_frame.resize(video.frames.size());
    for (size_t fi = 0; fi < video.frames.size(); ++fi) {
        std::vector<std::string> ids;
        for (const auto& det : video.frames[fi].detections) ids.push_back(det.track_id);
        std::sort(ids.begin(), ids.end());
        for (auto& id : ids) out.per_frame[fi].push_back({std::move(id), {}});
    }
    return out;
}

std::vector<TrackClassScore> area_weighted_scores(const std::vector<ClassPrediction>& predictions,
                                                  const std::vector<Tracklet>& tracklets) {
    // Area lookup by (track, frame).
    std::map<std::pair<std::string, int>, double> areas;
    for (const auto& t : tracklets)
        for (const auto& det : t.detections) areas[{t.track_id, det.frame_index}] = det.bbox.area();

    std::map<std::string, TrackClassScore> by_track;
    for (const auto& pred : predictions) {
        auto it = areas.find({pred.track_id, pred.frame_index});
        if (it == areas.end()) {
            std::ostringstream msg;
            msg << "prediction for track \"" << pred.track_id << "\" frame " << pred.frame_index
                << " has no matching detection";
            throw ValidationError(msg.str());
        }
        const double area = it->second;
        TrackClassScore& score = by_track[pred.track_id];
        score.track_id = pred.track_id;
        for (const auto& [label, prob] : pred.topk)
            score.scores[normalize_label(label)] += prob * area;
    }

    std::vector<TrackClassScore> out;
    out.reserve(by_track.size());
    for (auto& [_, score] : by_track) {
        // std::map iterates labels in lexicographic order, so strict > keeps
        // the smaller label on ties.
        double best = -1.0;
        for (const auto& [label, value] : score.scores) {
            if (value > best) {
                best = value;
                score.argmax = label;
            }
        }
        out.push_back(std::move(score));
    }
    return out;
}

HazardSelection whitelist_filter(const HazardSelection& selection,
                                 const std::vector<TrackClassScore>& scores,
                                 const Whitelist& whitelist) {
    std::map<std::string, const TrackClassScore*> by_track;
    for (const auto& s : scores) by_track[s.track_id] = &s;

    HazardSelection out{selection.video_id, {}};
    out.per_frame.resize(selection.per_frame.size());
    for (size_t fi = 0; fi < selection.per_frame.size(); ++fi) {
        for (const auto& entry : selection.per_frame[fi]) {
            auto it = by_track.find(entry.track_id);
            if (it == by_track.end()) {
                out.per_frame[fi].push_back(entry);  // unscored: keep
                continue;
            }
            const std::string& argmax = it->second->argmax;
            if (whitelist.contains(argmax)) continue;
            HazardEntry kept = entry;
            kept.label = argmax;
            out.per_frame[fi].push_back(std::move(kept));
        }
    }
    return out;
}

HazardSelection trajectory_size_filter(const HazardSelection& selection,
                                       const std::vector<Tracklet>& tracklets,
                                       TrajectoryComparator comparator,
                                       TrajectoryBoxStat box_stat) {
    std::set<std::string> dropped;
    for (const auto& t : tracklets) {
        if (t.detections.empty()) continue;
        const auto [fx, fy] = t.first().bbox.center();
        const auto [lx, ly] = t.last().bbox.center();
        const double displacement = std::hypot(lx - fx, ly - fy);

        double w = 0.0, h = 0.0;
        if (box_stat == TrajectoryBoxStat::Mean) {
            for (const auto& det : t.detections) {
                w += det.bbox.width();
                h += det.bbox.height();
            }
            w /= static_cast<double>(t.detections.size());
            h /= static_cast<double>(t.detections.size());
        } else {
            for (const auto& det : t.detections) {
                w = std::max(w, det.bbox.width());
                h = std::max(h, det.bbox.height());
            }
        }
        const double threshold = comparator == TrajectoryComparator::Max ? std::max(w, h)
                                                                         : std::min(w, h);
        if (displacement < threshold) dropped.insert(t.track_id);
    }

    HazardSelection out{selection.video_id, {}};
    out.per_frame.resize(selection.per_frame.size());
    for (size_t fi = 0; fi < selection.per_frame.size(); ++fi) {
        for (const auto& entry : selection.per_frame[fi]) {
            if (!dropped.count(entry.track_id)) out.per_frame[fi].push_back(entry);
        }
    }
    return out;
}

HazardSelection select_hazards(const VideoAnnotations& video, const HazardConfig& config,
                               const std::vector<ClassPrediction>& predictions) {
    HazardSelection selection = config.base == HazardConfig::Base::AllTracks
                                    ? all_tracks(video)
                                    : nearest_k_tracks(video, config.k);
    const std::vector<Tracklet> tracklets = build_tracklets(video);
    if (config.whitelist_enabled) {
        const auto scores = area_weighted_scores(predictions, tracklets);
        selection = whitelist_filter(selection, scores, config.whitelist);
    }
    if (config.size_filter_enabled) {
        selection = trajectory_size_filter(selection, tracklets, config.comparator, config.box_stat);
    }
    return selection;
}

std::vector<ClassPrediction> parse_predictions_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open predictions: " + path);
    std::vector<ClassPrediction> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ValidationError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        ClassPrediction pred;
        pred.video_id = j.value("video_id", std::string{});
        pred.track_id = j.value("track_id", std::string{});
        pred.frame_index = j.value("frame_index", -1);
        if (pred.track_id.empty() || pred.frame_index < 0)
            throw ValidationError(path + ":" + std::to_string(lineno) +
                                  ": track_id and frame_index required");
        std::set<std::string> seen;
        for (const auto& entry : j.value("topk", json::array())) {
            if (!entry.is_array() || entry.size() != 2)
                throw ValidationError(path + ":" + std::to_string(lineno) +
                                      ": topk entries must be [label, prob]");
            std::string label = entry[0].get<std::string>();
            const double prob = entry[1].get<double>();
            if (label.empty() || !std::isfinite(prob) || prob < 0.0)
                throw ValidationError(path + ":" + std::to_string(lineno) +
                                      ": labels must be non-empty, probs finite and >= 0");
            if (!seen.insert(normalize_label(label)).second)
                throw ValidationError(path + ":" + std::to_string(lineno) + ": class \"" + label +
                                      "\" repeated in topk");
            pred.topk.emplace_back(std::move(label), prob);
        }
        if (pred.topk.size() > 10)
            throw ValidationError(path + ":" + std::to_string(lineno) + ": topk longer than 10");
        out.push_back(std::move(pred));
    }
    return out;
}

void write_predictions_jsonl(const std::vector<ClassPrediction>& predictions,
                             const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write predictions: " + path);
    for (const auto& pred : predictions) {
        json topk = json::array();
        for (const auto& [label, prob] : pred.topk) topk.push_back({label, prob});
        out << json{{"video_id", pred.video_id},
                    {"track_id", pred.track_id},
                    {"frame_index", pred.frame_index},
                    {"topk", std::move(topk)}}
                   .dump()
            << "\n";
    }
    if (!out) throw IoError("short write: " + path);
}

}  // namespace hazpipe
