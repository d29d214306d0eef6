#include "hazpipe/captions.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "hazpipe/errors.hpp"
#include "hazpipe/image_io.hpp"
#include "hazpipe/sha256.hpp"
#include "hazpipe/util.hpp"

using nlohmann::json;

namespace hazpipe {

const CaptionPrompt& categories_prompt() {
    static const CaptionPrompt p{
        CaptionPrompt::Id::Categories,
        "Propose 5 most likely class labels of the object, the context of the image is traffic "
        "and unusual hazards such as various animals on the road. Write only the class names "
        "separated by spaces."};
    return p;
}

const CaptionPrompt& sentence_prompt() {
    static const CaptionPrompt p{
        CaptionPrompt::Id::Sentence,
        "Considering the context of traffic, caption the hazard in one short sentence of max 30 "
        "characters and 6 words."};
    return p;
}

const std::vector<CaptionPrompt>& default_prompts() {
    static const std::vector<CaptionPrompt> prompts{categories_prompt(), sentence_prompt()};
    return prompts;
}

std::string prompt_id_name(CaptionPrompt::Id id) {
    return id == CaptionPrompt::Id::Categories ? "categories" : "sentence";
}

std::string replay_cache_key(const std::string& video_id, const std::string& track_id,
                             int crop_rank, CaptionPrompt::Id prompt_id) {
    std::string material;
    material.reserve(video_id.size() + track_id.size() + 16);
    material += video_id;
    material += '\x1f';
    material += track_id;
    material += '\x1f';
    material += std::to_string(crop_rank);
    material += '\x1f';
    material += prompt_id_name(prompt_id);
    return sha256_hex(material);
}

HttpCaptionBackend::HttpCaptionBackend(std::string base_url, int attempts, int backoff_base_ms)
    : base_url_(std::move(base_url)), attempts_(attempts), backoff_base_ms_(backoff_base_ms) {}

std::string HttpCaptionBackend::caption(const CaptionRequest& request) {
    const json body{{"image_png_base64", base64_encode(request.png_bytes)},
                    {"prompt", request.prompt_text}};
    const std::string payload = body.dump();

    std::string last_error;
    int delay_ms = backoff_base_ms_;
    for (int attempt = 1; attempt <= attempts_; ++attempt) {
        httplib::Client client(base_url_);
        client.set_read_timeout(60, 0);
        auto res = client.Post("/caption", payload, "application/json");
        if (res && res->status == 200) {
            try {
                return json::parse(res->body).at("text").get<std::string>();
            } catch (const json::exception& e) {
                last_error = std::string("bad /caption response: ") + e.what();
            }
        } else if (res) {
            last_error = "/caption returned HTTP " + std::to_string(res->status);
        } else {
            last_error = "/caption unreachable: " + httplib::to_string(res.error());
        }
        if (attempt < attempts_) {
            std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
            delay_ms *= 2;
        }
    }
    throw BackendError(base_url_ + ": " + last_error);
}

ReplayCaptionBackend::ReplayCaptionBackend(const std::string& jsonl_path) : path_(jsonl_path) {
    std::ifstream in(jsonl_path);
    if (!in) throw IoError("cannot open caption cache: " + jsonl_path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            json j = json::parse(line);
            entries_[j.at("key").get<std::string>()] = j.at("text").get<std::string>();
        } catch (const json::exception& e) {
            throw ValidationError(jsonl_path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

std::string ReplayCaptionBackend::caption(const CaptionRequest& request) {
    const std::string key =
        replay_cache_key(request.video_id, request.track_id, request.crop_rank, request.prompt_id);
    auto it = entries_.find(key);
    if (it == entries_.end())
        throw BackendError("caption cache " + path_ + " has no entry for video \"" +
                           request.video_id + "\" track \"" + request.track_id + "\" crop " +
                           std::to_string(request.crop_rank) + " prompt " +
                           prompt_id_name(request.prompt_id));
    return it->second;
}

void ReplayCaptionBackend::append_record(const std::string& jsonl_path, const std::string& key,
                                         const std::string& text) {
    std::ofstream out(jsonl_path, std::ios::app);
    if (!out) throw IoError("cannot append to caption cache: " + jsonl_path);
    out << json{{"key", key}, {"text", text}}.dump() << "\n";
}

std::vector<TrackCrop> select_largest_crops(const Tracklet& tracklet, const FrameStore& frames,
                                            int count) {
    if (tracklet.detections.empty())
        throw ValidationError("cannot crop an empty tracklet \"" + tracklet.track_id + "\"");
    std::vector<const Detection*> ranked;
    ranked.reserve(tracklet.detections.size());
    for (const auto& det : tracklet.detections) ranked.push_back(&det);
    std::stable_sort(ranked.begin(), ranked.end(), [](const Detection* a, const Detection* b) {
        return a->bbox.area() > b->bbox.area();  // stable keeps earlier frames on ties
    });

    std::vector<TrackCrop> out;
    const size_t take = std::min(ranked.size(), static_cast<size_t>(count));
    for (size_t i = 0; i < take; ++i) {
        const Detection& det = *ranked[i];
        RgbImage frame = frames.load_frame(det.frame_index);
        out.push_back({det.frame_index, static_cast<int>(i) + 1, crop_square(frame, det.bbox)});
    }
    return out;
}

std::vector<RawCaption> caption_crops(const std::string& video_id, const std::string& track_id,
                                      const std::vector<TrackCrop>& crops, CaptionBackend& backend,
                                      const std::vector<CaptionPrompt>& prompts) {
    std::vector<RawCaption> out;
    out.reserve(crops.size() * prompts.size());
    for (const auto& crop : crops) {
        const std::vector<uint8_t> png = encode_png(crop.image);
        for (const auto& prompt : prompts) {
            CaptionRequest request{video_id, track_id, crop.crop_rank, prompt.id, prompt.text, png};
            RawCaption raw{track_id, crop.crop_rank, prompt.id, {}, false};
            try {
                raw.text = backend.caption(request);
                raw.failed = trim(raw.text).empty();  // blank answers carry no words
            } catch (const BackendError&) {
                raw.failed = true;
            }
            out.push_back(std::move(raw));
        }
    }
    return out;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i) {
            std::string_view word = text.substr(i, j - i);
            while (!word.empty() && std::ispunct(static_cast<unsigned char>(word.front())))
                word.remove_prefix(1);
            while (!word.empty() && std::ispunct(static_cast<unsigned char>(word.back())))
                word.remove_suffix(1);
            if (!word.empty()) out.push_back(to_lower(word));
        }
        i = j;
    }
    return out;
}

AggregatedCaption aggregate_words(const std::vector<RawCaption>& raw, int take) {
    // Fix the processing order: crop rank ascending, Categories before
    // Sentence; "first appearance" is defined against this order.
    std::vector<const RawCaption*> ordered;
    ordered.reserve(raw.size());
    for (const auto& r : raw) ordered.push_back(&r);
    std::stable_sort(ordered.begin(), ordered.end(), [](const RawCaption* a, const RawCaption* b) {
        if (a->crop_rank != b->crop_rank) return a->crop_rank < b->crop_rank;
        return static_cast<int>(a->prompt_id) < static_cast<int>(b->prompt_id);
    });

    struct TokenStat {
        int count = 0;
        size_t first_seen = 0;
    };
    std::map<std::string, TokenStat> stats;
    size_t position = 0;
    std::string track_id;
    for (const RawCaption* r : ordered) {
        track_id = r->track_id;
        if (r->failed) continue;
        for (auto& token : tokenize(r->text)) {
            auto [it, inserted] = stats.try_emplace(std::move(token), TokenStat{0, position});
            it->second.count += 1;
            ++position;
        }
    }

    std::vector<std::pair<std::string, TokenStat>> ranked(stats.begin(), stats.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second.count != b.second.count) return a.second.count > b.second.count;
        return a.second.first_seen < b.second.first_seen;
    });

    AggregatedCaption out;
    out.track_id = track_id;
    for (const auto& [token, _] : ranked) {
        if (static_cast<int>(out.words.size()) >= take) break;
        out.words.push_back(token);
    }
    for (size_t i = 0; i < out.words.size(); ++i) {
        if (i) out.joined += ' ';
        out.joined += out.words[i];
    }
    return out;
}

}  // namespace hazpipe
