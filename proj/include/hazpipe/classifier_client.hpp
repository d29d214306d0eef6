#pragma once

#include <string>
#include <vector>

#include "hazpipe/frame_store.hpp"
#include "hazpipe/hazards.hpp"
#include "hazpipe/types.hpp"

namespace hazpipe {

/**
 * POST /classify client: sends each detection's square crop as PNG bytes and
 * collects the returned top-k list, producing one ClassPrediction per
 * (track, frame). Retries transport errors; throws BackendError when the
 * service stays unreachable.
 */
class ClassifierClient {
public:
    explicit ClassifierClient(std::string base_url, int attempts = 3, int backoff_base_ms = 1000);

    std::vector<std::pair<std::string, double>> classify_png(const std::vector<uint8_t>& png_bytes);

    std::vector<ClassPrediction> classify_video(const VideoAnnotations& video,
                                                const FrameStore& frames);

private:
    std::string base_url_;
    int attempts_;
    int backoff_base_ms_;
};

}  // namespace hazpipe
