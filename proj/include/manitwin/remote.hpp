#pragma once

#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "manitwin/annotation.hpp"

namespace manitwin {

inline constexpr const char* kAnnotationUrlEnv = "MANITWIN_ANNOTATION_URL";
inline constexpr const char* kAnnotatePath = "/api/v1/annotate/";

/// Endpoint base URL from the environment, if set and non-empty.
std::optional<std::string> annotation_url_from_env();

struct RemoteConfig {
    std::string base_url;  // scheme://host:port
    double timeout_s = 30.0;
    int max_in_flight = 4;
    int max_attempts = 3;
    int backoff_ms = 100;  // doubles after each failed attempt
    bool send_views = true;
};

/// Speaks the annotation protocol over HTTP:
///
///   POST {base}/api/v1/annotate/{stage}
///   Idempotency-Key: {asset_id}/{stage}
///   {"stage": ..., "asset_id": ..., "idempotency_key": ..., "payload": {...}}
///
/// and expects {"stage": ..., "asset_id": ..., "response": {...}} back.
/// Connection failures, 429 and 5xx are retried; anything else that is not a
/// well-formed response raises TransportError.
class RemoteAnnotationClient final : public AnnotationClient {
public:
    explicit RemoteAnnotationClient(RemoteConfig config);

    GateResult quality_gate(const AssetView& asset) override;
    PropertyEstimate estimate_properties(const AssetView& asset) override;
    SemanticCaption caption(const AssetView& asset) override;
    PointSelection select_points(const AssetView& asset, const PointCloud& candidates) override;
    std::vector<GraspPose> propose_grasps(const AssetView& asset, const PointCloud& cloud,
                                          const GripperModel& gripper, int max_n, std::uint64_t seed) override;

    /// One protocol round trip; returns the "response" member.
    Json call(std::string_view stage, const std::string& asset_id, const Json& payload);

private:
    Json asset_payload(const AssetView& asset) const;

    RemoteConfig config_;
    std::string host_;
    std::mutex mutex_;
    std::condition_variable slot_free_;
    int in_flight_ = 0;
};

/// Serves the annotation protocol from any AnnotationClient, so the remote
/// adapter can be tested against the mock. Responses are cached by
/// idempotency key and replayed on repeat.
class StubAnnotationServer {
public:
    explicit StubAnnotationServer(std::shared_ptr<AnnotationClient> backend);
    ~StubAnnotationServer();
    StubAnnotationServer(const StubAnnotationServer&) = delete;
    StubAnnotationServer& operator=(const StubAnnotationServer&) = delete;

    /// Binds (port 0 picks a free one) and serves on a background thread.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    /// Binds and serves on the calling thread until stop().
    void listen(const std::string& host, int port);
    void stop();
    std::string base_url() const;

    // Test hooks.
    void fail_next(int count, int status = 503);
    void set_response_hook(std::function<void(std::string_view stage, Json& response)> hook);
    int requests_seen() const;
    int backend_calls() const;
    int max_concurrent() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Builds the AnnotationClient for a mode name ("mock" or "remote").
std::shared_ptr<AnnotationClient> make_client(const std::string& mode, const MockConfig& mock,
                                              const RemoteConfig& remote);

}  // namespace manitwin
