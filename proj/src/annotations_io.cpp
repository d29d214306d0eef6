#include "hazpipe/annotations_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hazpipe/errors.hpp"

using nlohmann::json;

namespace hazpipe {

namespace {

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

json parse_json_text(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("json: ") + e.what());
    }
}

std::vector<VideoAnnotations> annotations_from_json(const json& doc) {
    if (!doc.is_object() || !doc.contains("videos") || !doc["videos"].is_array())
        throw ValidationError("annotations: top-level object with a \"videos\" array expected");

    std::vector<VideoAnnotations> out;
    std::set<std::string> seen_ids;
    for (const auto& jv : doc["videos"]) {
        VideoAnnotations video;
        video.video_id = jv.value("video_id", std::string{});
        if (video.video_id.empty())
            throw ValidationError("annotations: video with empty or missing video_id");
        if (!seen_ids.insert(video.video_id).second)
            throw ValidationError("annotations: duplicate video_id \"" + video.video_id + "\"");
        video.width = jv.value("width", 0);
        video.height = jv.value("height", 0);
        if (video.width <= 0 || video.height <= 0)
            throw ValidationError("video " + video.video_id + ": width/height must be positive");

        std::map<int, FrameAnnotations> frames;
        for (const auto& jf : jv.value("frames", json::array())) {
            if (!jf.contains("frame_index") || !jf["frame_index"].is_number_integer())
                throw ValidationError("video " + video.video_id + ": frame without integer frame_index");
            const int fi = jf["frame_index"].get<int>();
            if (fi < 0)
                throw ValidationError("video " + video.video_id + ": negative frame_index");
            if (frames.count(fi)) {
                std::ostringstream msg;
                msg << "video " << video.video_id << ": duplicate frame_index " << fi;
                throw ValidationError(msg.str());
            }
            FrameAnnotations frame;
            frame.frame_index = fi;
            std::set<std::string> tracks_in_frame;
            for (const auto& jd : jf.value("detections", json::array())) {
                Detection det;
                det.frame_index = fi;
                det.track_id = jd.value("track_id", std::string{});
                if (det.track_id.empty()) {
                    std::ostringstream msg;
                    msg << "video " << video.video_id << " frame " << fi
                        << ": detection with empty track_id";
                    throw ValidationError(msg.str());
                }
                if (!tracks_in_frame.insert(det.track_id).second) {
                    std::ostringstream msg;
                    msg << "video " << video.video_id << " frame " << fi << ": track \""
                        << det.track_id << "\" appears twice";
                    throw ValidationError(msg.str());
                }
                const auto& jb = jd.contains("bbox") ? jd["bbox"] : json{};
                if (!jb.is_array() || jb.size() != 4)
                    throw ValidationError("video " + video.video_id + " frame " +
                                          std::to_string(fi) + " track \"" + det.track_id +
                                          "\": bbox must be [x1,y1,x2,y2]");
                det.bbox = {jb[0].get<double>(), jb[1].get<double>(), jb[2].get<double>(),
                            jb[3].get<double>()};
                if (!det.bbox.valid()) {
                    std::ostringstream msg;
                    msg << "video " << video.video_id << " frame " << fi << " track \""
                        << det.track_id << "\": bbox (" << det.bbox.x1 << "," << det.bbox.y1
                        << "," << det.bbox.x2 << "," << det.bbox.y2 << ") has x2<x1 or y2<y1";
                    throw ValidationError(msg.str());
                }
                frame.detections.push_back(std::move(det));
            }
            frames.emplace(fi, std::move(frame));
        }

        // Materialize a contiguous 0..N-1 frame list, empty where unannotated.
        const int n = frames.empty() ? 0 : frames.rbegin()->first + 1;
        video.frames.resize(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) video.frames[i].frame_index = i;
        for (auto& [fi, frame] : frames) video.frames[fi] = std::move(frame);
        out.push_back(std::move(video));
    }
    return out;
}

}  // namespace

std::vector<VideoAnnotations> parse_annotations(const std::string& path) {
    return annotations_from_json(load_json(path));
}

std::vector<VideoAnnotations> parse_annotations_text(const std::string& json_text) {
    return annotations_from_json(parse_json_text(json_text));
}

std::string serialize_annotations(const std::vector<VideoAnnotations>& videos) {
    json jvideos = json::array();
    for (const auto& video : videos) {
        json jframes = json::array();
        for (const auto& frame : video.frames) {
            if (frame.detections.empty()) continue;  // re-materialized on parse
            json jdets = json::array();
            for (const auto& det : frame.detections) {
                jdets.push_back({{"track_id", det.track_id},
                                 {"bbox", {det.bbox.x1, det.bbox.y1, det.bbox.x2, det.bbox.y2}}});
            }
            jframes.push_back({{"frame_index", frame.frame_index}, {"detections", std::move(jdets)}});
        }
        jvideos.push_back({{"video_id", video.video_id},
                           {"width", video.width},
                           {"height", video.height},
                           {"frames", std::move(jframes)}});
    }
    return json{{"videos", std::move(jvideos)}}.dump(2);
}

std::vector<Tracklet> build_tracklets(const VideoAnnotations& video) {
    std::map<std::string, Tracklet> by_id;
    for (const auto& frame : video.frames) {
        for (const auto& det : frame.detections) {
            Tracklet& t = by_id[det.track_id];
            t.track_id = det.track_id;
            t.detections.push_back(det);
        }
    }
    std::vector<Tracklet> out;
    out.reserve(by_id.size());
    for (auto& [_, t] : by_id) out.push_back(std::move(t));
    return out;
}

namespace {

std::vector<GroundTruth> ground_truth_from_json(const json& doc,
                                                const std::vector<VideoAnnotations>& annotations,
                                                std::vector<std::string>* warnings) {
    if (!doc.is_object() || !doc.contains("videos") || !doc["videos"].is_array())
        throw ValidationError("ground truth: top-level object with a \"videos\" array expected");

    std::map<std::string, const VideoAnnotations*> ann_by_id;
    for (const auto& v : annotations) ann_by_id[v.video_id] = &v;

    std::vector<GroundTruth> out;
    for (const auto& jv : doc["videos"]) {
        GroundTruth gt;
        gt.video_id = jv.value("video_id", std::string{});
        auto it = ann_by_id.find(gt.video_id);
        if (it == ann_by_id.end())
            throw ValidationError("ground truth: unknown video \"" + gt.video_id + "\"");
        const VideoAnnotations& ann = *it->second;
        const int n = ann.frame_count();

        if (!jv.contains("reaction") || !jv["reaction"].is_array())
            throw ValidationError("ground truth " + gt.video_id + ": \"reaction\" array missing");
        for (const auto& r : jv["reaction"]) {
            if (!r.is_boolean())
                throw ValidationError("ground truth " + gt.video_id + ": reaction must be booleans");
            gt.reaction.push_back(r.get<bool>());
        }
        if (static_cast<int>(gt.reaction.size()) != n) {
            std::ostringstream msg;
            msg << "ground truth " << gt.video_id << ": reaction length " << gt.reaction.size()
                << " but annotations have " << n << " frames";
            throw ValidationError(msg.str());
        }

        // Collect track ids the annotations know, to flag stray ones.
        std::set<std::string> known_tracks;
        for (const auto& frame : ann.frames)
            for (const auto& det : frame.detections) known_tracks.insert(det.track_id);

        gt.hazard_tracks.assign(static_cast<size_t>(n), {});
        gt.hazard_classes.assign(static_cast<size_t>(n), {});
        for (const auto& jh : jv.value("hazards", json::array())) {
            const int fi = jh.value("frame_index", -1);
            if (fi < 0 || fi >= n) {
                std::ostringstream msg;
                msg << "ground truth " << gt.video_id << ": hazard frame_index " << fi
                    << " outside [0," << n << ")";
                throw ValidationError(msg.str());
            }
            for (const auto& t : jh.value("tracks", json::array())) {
                const std::string track = t.get<std::string>();
                if (!known_tracks.count(track) && warnings) {
                    warnings->push_back("ground truth " + gt.video_id + " frame " +
                                        std::to_string(fi) + ": track \"" + track +
                                        "\" not in annotations (kept)");
                }
                gt.hazard_tracks[fi].insert(track);
            }
            for (const auto& c : jh.value("classes", json::array()))
                gt.hazard_classes[fi].insert(c.get<std::string>());
        }
        out.push_back(std::move(gt));
    }
    return out;
}

}  // namespace

std::vector<GroundTruth> parse_ground_truth(const std::string& path,
                                            const std::vector<VideoAnnotations>& annotations,
                                            std::vector<std::string>* warnings) {
    return ground_truth_from_json(load_json(path), annotations, warnings);
}

std::vector<GroundTruth> parse_ground_truth_text(const std::string& json_text,
                                                 const std::vector<VideoAnnotations>& annotations,
                                                 std::vector<std::string>* warnings) {
    return ground_truth_from_json(parse_json_text(json_text), annotations, warnings);
}

std::string serialize_ground_truth(const std::vector<GroundTruth>& truths) {
    json jvideos = json::array();
    for (const auto& gt : truths) {
        json jreaction = json::array();
        for (bool r : gt.reaction) jreaction.push_back(r);
        json jhazards = json::array();
        for (int i = 0; i < gt.frame_count(); ++i) {
            if (gt.hazard_tracks[i].empty() && gt.hazard_classes[i].empty()) continue;
            jhazards.push_back({{"frame_index", i},
                                {"tracks", gt.hazard_tracks[i]},
                                {"classes", gt.hazard_classes[i]}});
        }
        jvideos.push_back({{"video_id", gt.video_id},
                           {"reaction", std::move(jreaction)},
                           {"hazards", std::move(jhazards)}});
    }
    return json{{"videos", std::move(jvideos)}}.dump(2);
}

}  // namespace hazpipe
