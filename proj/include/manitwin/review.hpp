#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "manitwin/asset.hpp"
#include "manitwin/manifest.hpp"

namespace manitwin {

inline constexpr std::array<std::string_view, 5> kReviewDimensions{
    "category_classification", "language_descriptions", "functional_point_labels", "physical_property_estimation",
    "grasp_point_selection"};

struct ReviewVerdict {
    std::string asset_id;
    std::array<bool, 5> correct{};  // indexed like kReviewDimensions
    bool accept = true;
    std::string reviewer_id;
    std::string timestamp;
    std::string note;

    bool operator==(const ReviewVerdict&) const = default;
};

/// Ratings are "correct" / "incorrect"; overall is "accept" / "reject".
Json to_json(const ReviewVerdict& v);
/// Throws ParseError for shape problems and ValidationError for rule
/// violations (missing dimension, reject without cause, empty reviewer).
ReviewVerdict verdict_from(const FieldReader& r);
void validate(const ReviewVerdict& v);

struct AccuracyReport {
    std::int64_t verdicts = 0;
    std::array<std::optional<double>, 5> percent{};  // per dimension, undefined with no verdicts
    std::optional<double> accept_percent;
};

Json to_json(const AccuracyReport& a);

struct QueueItem {
    std::string asset_id;
    std::string thumbnail_url;
    std::string stage_status;
    bool pending = true;
};

struct QueuePage {
    std::vector<QueueItem> items;
    int page = 1;
    int page_size = 20;
    std::int64_t total = 0;
    int pages = 0;
};

Json to_json(const QueuePage& p);

/// Review state over a pipeline store: which annotated assets are up for
/// review and the append-only verdict files beside them.
class ReviewStore {
public:
    /// `sample_rate` in [0, 1] picks the reviewed subset by a seeded hash of
    /// the asset id.
    explicit ReviewStore(std::filesystem::path root, double sample_rate = 1.0, std::uint64_t seed = 0);

    /// Rescans the store for assets and verdict files.
    void reload();

    bool in_sample(const std::string& asset_id) const;
    /// Pending assets (sampled, annotated, no verdict yet), in id order.
    QueuePage pending(int page, int page_size) const;
    /// Manifest, render URLs, grasp outcomes, verdicts. Throws NotFoundError.
    Json detail(const std::string& asset_id) const;
    /// PNG bytes of one render. Throws NotFoundError.
    std::string render(const std::string& asset_id, int view) const;
    /// Appends the verdict. Throws NotFoundError, ConflictError (same
    /// reviewer twice on one asset) or ValidationError.
    ReviewVerdict submit(ReviewVerdict v);
    std::vector<ReviewVerdict> verdicts(const std::string& asset_id) const;
    AccuracyReport accuracy() const;
    PipelineStats pipeline_stats() const;

private:
    std::filesystem::path root_;
    double sample_rate_;
    std::uint64_t seed_;
    mutable std::shared_mutex mutex_;
    std::vector<std::string> annotated_;  // sorted
    std::map<std::string, std::vector<ReviewVerdict>, std::less<>> verdicts_;

    bool annotated(const std::string& id) const;
};

/// HTTP front end for ReviewStore under /api/v1.
class ReviewServer {
public:
    explicit ReviewServer(std::shared_ptr<ReviewStore> store);
    ~ReviewServer();
    ReviewServer(const ReviewServer&) = delete;
    ReviewServer& operator=(const ReviewServer&) = delete;

    /// Binds (port 0 picks a free one) and serves on a background thread.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    /// Serves on the calling thread until stop().
    void listen(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace manitwin
