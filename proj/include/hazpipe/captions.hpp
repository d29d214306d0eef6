#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "hazpipe/frame_store.hpp"
#include "hazpipe/image.hpp"
#include "hazpipe/types.hpp"

namespace hazpipe {

struct CaptionPrompt {
    enum class Id { Categories, Sentence };
    Id id;
    std::string text;
};

/// The two captioning prompts, verbatim.
const CaptionPrompt& categories_prompt();
const CaptionPrompt& sentence_prompt();
const std::vector<CaptionPrompt>& default_prompts();

std::string prompt_id_name(CaptionPrompt::Id id);

/// Everything a backend needs to answer one (crop, prompt) pair. Replay
/// backends key on the identity fields, live backends use prompt + image.
struct CaptionRequest {
    std::string video_id;
    std::string track_id;
    int crop_rank = 1;  // 1-based, largest crop first
    CaptionPrompt::Id prompt_id = CaptionPrompt::Id::Categories;
    std::string prompt_text;
    std::vector<uint8_t> png_bytes;
};

/// Cache key: sha256 over "video\x1ftrack\x1frank\x1fprompt".
std::string replay_cache_key(const std::string& video_id, const std::string& track_id,
                             int crop_rank, CaptionPrompt::Id prompt_id);

class CaptionBackend {
public:
    virtual ~CaptionBackend() = default;
    /// Returns the caption text; throws BackendError on failure.
    virtual std::string caption(const CaptionRequest& request) = 0;
};

/**
 * POST /caption client with retries (3 attempts, exponential backoff).
 * The backoff base is configurable so tests do not sleep.
 */
class HttpCaptionBackend : public CaptionBackend {
public:
    explicit HttpCaptionBackend(std::string base_url, int attempts = 3,
                                int backoff_base_ms = 1000);
    std::string caption(const CaptionRequest& request) override;

private:
    std::string base_url_;
    int attempts_;
    int backoff_base_ms_;
};

/// Deterministic JSONL cache of captioner responses, for offline runs and CI.
class ReplayCaptionBackend : public CaptionBackend {
public:
    explicit ReplayCaptionBackend(const std::string& jsonl_path);
    std::string caption(const CaptionRequest& request) override;

    /// Append one record; used when recording a live session.
    static void append_record(const std::string& jsonl_path, const std::string& key,
                              const std::string& text);

private:
    std::map<std::string, std::string> entries_;
    std::string path_;
};

struct RawCaption {
    std::string track_id;
    int crop_rank = 1;
    CaptionPrompt::Id prompt_id = CaptionPrompt::Id::Categories;
    std::string text;
    bool failed = false;
};

struct TrackCrop {
    int frame_index = 0;
    int crop_rank = 1;
    RgbImage image;
};

/**
 * The track's crops ranked by bbox area descending (ties prefer earlier
 * frames), at most `count`, each squared via crop_square.
 */
std::vector<TrackCrop> select_largest_crops(const Tracklet& tracklet, const FrameStore& frames,
                                            int count = 5);

/**
 * One RawCaption per (crop, prompt): failures are recorded on the caption
 * rather than thrown, so one bad crop cannot sink a batch.
 */
std::vector<RawCaption> caption_crops(const std::string& video_id,
                                      const std::string& track_id,
                                      const std::vector<TrackCrop>& crops,
                                      CaptionBackend& backend,
                                      const std::vector<CaptionPrompt>& prompts);

/// Lowercase, split on whitespace, strip edge punctuation, drop empties.
std::vector<std::string> tokenize(std::string_view text);

struct AggregatedCaption {
    std::string track_id;
    std::vector<std::string> words;
    std::string joined;
};

/**
 * Token frequencies over all successful captions, processed crop_rank
 * ascending with Categories before Sentence; sort by frequency descending,
 * ties by first appearance; keep the first `take` unique tokens.
 */
AggregatedCaption aggregate_words(const std::vector<RawCaption>& raw, int take = 5);

}  // namespace hazpipe
