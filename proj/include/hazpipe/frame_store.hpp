#pragma once

#include <map>
#include <optional>
#include <string>

#include "hazpipe/image.hpp"

namespace hazpipe {

/**
 * Frame directory of one video: files named frame_NNNNNN.png (or .pgm), the
 * frame index parsed from the filename. When expected dimensions are given,
 * every loaded frame is checked against them.
 */
class FrameStore {
public:
    FrameStore() = default;
    FrameStore(std::string video_id, const std::string& directory,
               std::optional<int> expected_width = std::nullopt,
               std::optional<int> expected_height = std::nullopt);

    const std::string& video_id() const { return video_id_; }
    bool has_frame(int frame_index) const { return paths_.count(frame_index) > 0; }
    int frame_count() const { return static_cast<int>(paths_.size()); }
    const std::string& frame_path(int frame_index) const;

    RgbImage load_frame(int frame_index) const;
    GrayImage load_gray_frame(int frame_index) const;

    /// Ordered frame indices present in the directory.
    std::vector<int> frame_indices() const;

private:
    std::string video_id_;
    std::map<int, std::string> paths_;
    std::optional<int> expected_width_;
    std::optional<int> expected_height_;
};

}  // namespace hazpipe
