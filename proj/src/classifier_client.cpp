#include "hazpipe/classifier_client.hpp"

#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "hazpipe/errors.hpp"
#include "hazpipe/image.hpp"
#include "hazpipe/image_io.hpp"

using nlohmann::json;

namespace hazpipe {

ClassifierClient::ClassifierClient(std::string base_url, int attempts, int backoff_base_ms)
    : base_url_(std::move(base_url)), attempts_(attempts), backoff_base_ms_(backoff_base_ms) {}

std::vector<std::pair<std::string, double>> ClassifierClient::classify_png(
    const std::vector<uint8_t>& png_bytes) {
    std::string last_error;
    int delay_ms = backoff_base_ms_;
    for (int attempt = 1; attempt <= attempts_; ++attempt) {
        httplib::Client client(base_url_);
        client.set_read_timeout(60, 0);
        auto res = client.Post("/classify",
                               reinterpret_cast<const char*>(png_bytes.data()), png_bytes.size(),
                               "image/png");
        if (res && res->status == 200) {
            try {
                const json body = json::parse(res->body);
                std::vector<std::pair<std::string, double>> topk;
                for (const auto& entry : body.at("topk")) {
                    topk.emplace_back(entry.at(0).get<std::string>(), entry.at(1).get<double>());
                }
                if (topk.size() > 10)
                    throw BackendError(base_url_ + ": /classify returned more than 10 classes");
                return topk;
            } catch (const json::exception& e) {
                last_error = std::string("bad /classify response: ") + e.what();
            }
        } else if (res) {
            last_error = "/classify returned HTTP " + std::to_string(res->status);
        } else {
            last_error = "/classify unreachable: " + httplib::to_string(res.error());
        }
        if (attempt < attempts_) {
            std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
            delay_ms *= 2;
        }
    }
    throw BackendError(base_url_ + ": " + last_error);
}

std::vector<ClassPrediction> ClassifierClient::classify_video(const VideoAnnotations& video,
                                                              const FrameStore& frames) {
    std::vector<ClassPrediction> out;
    for (const auto& frame : video.frames) {
        if (frame.detections.empty()) continue;
        const RgbImage image = frames.load_frame(frame.frame_index);
        for (const auto& det : frame.detections) {
            const auto png = encode_png(crop_square(image, det.bbox));
            ClassPrediction pred;
            pred.video_id = video.video_id;
            pred.track_id = det.track_id;
            pred.frame_index = det.frame_index;
            pred.topk = classify_png(png);
            out.push_back(std::move(pred));
        }
    }
    return out;
}

}  // namespace hazpipe
