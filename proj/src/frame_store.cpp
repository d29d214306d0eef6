#include "hazpipe/frame_store.hpp"

#include <filesystem>
#include <sstream>

#include "hazpipe/errors.hpp"
#include "hazpipe/image_io.hpp"

namespace fs = std::filesystem;

namespace hazpipe {

namespace {

std::optional<int> parse_frame_index(const std::string& stem) {
    constexpr std::string_view prefix = "frame_";
    if (stem.rfind(prefix, 0) != 0) return std::nullopt;
    const std::string digits = stem.substr(prefix.size());
    if (digits.empty()) return std::nullopt;
    for (char c : digits)
        if (c < '0' || c > '9') return std::nullopt;
    try {
        return std::stoi(digits);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace

FrameStore::FrameStore(std::string video_id, const std::string& directory,
                       std::optional<int> expected_width, std::optional<int> expected_height)
    : video_id_(std::move(video_id)),
      expected_width_(expected_width),
      expected_height_(expected_height) {
    if (!fs::is_directory(directory))
        throw IoError("frame directory not found: " + directory);
    for (const auto& entry : fs::directory_iterator(directory)) {
        if (!entry.is_regular_file()) continue;
        const fs::path& p = entry.path();
        const std::string ext = p.extension().string();
        if (ext != ".png" && ext != ".pgm") continue;
        if (auto idx = parse_frame_index(p.stem().string())) {
            paths_[*idx] = p.string();
        }
    }
}

const std::string& FrameStore::frame_path(int frame_index) const {
    auto it = paths_.find(frame_index);
    if (it == paths_.end()) {
        std::ostringstream msg;
        msg << "video " << video_id_ << ": no file for frame " << frame_index;
        throw IoError(msg.str());
    }
    return it->second;
}

RgbImage FrameStore::load_frame(int frame_index) const {
    RgbImage img = read_image(frame_path(frame_index));
    if ((expected_width_ && img.width != *expected_width_) ||
        (expected_height_ && img.height != *expected_height_)) {
        std::ostringstream msg;
        msg << "video " << video_id_ << " frame " << frame_index << ": decoded "
            << img.width << "x" << img.height << ", annotations say "
            << expected_width_.value_or(-1) << "x" << expected_height_.value_or(-1);
        throw ValidationError(msg.str());
    }
    return img;
}

GrayImage FrameStore::load_gray_frame(int frame_index) const {
    return to_gray(load_frame(frame_index));
}

std::vector<int> FrameStore::frame_indices() const {
    std::vector<int> out;
    out.reserve(paths_.size());
    for (const auto& [idx, _] : paths_) out.push_back(idx);
    return out;
}

}  // namespace hazpipe
