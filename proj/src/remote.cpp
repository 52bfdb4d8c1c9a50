#include "manitwin/remote.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <map>
#include <thread>

#include <httplib.h>

#include "manitwin/errors.hpp"
#include "manitwin/manifest.hpp"

namespace manitwin {

std::optional<std::string> annotation_url_from_env() {
    const char* v = std::getenv(kAnnotationUrlEnv);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
}

// --- client -----------------------------------------------------------------------

RemoteAnnotationClient::RemoteAnnotationClient(RemoteConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) throw ArgumentError("remote client: empty base URL");
    while (!config_.base_url.empty() && config_.base_url.back() == '/') config_.base_url.pop_back();
    if (config_.max_in_flight < 1) throw ArgumentError("remote client: max in-flight must be >= 1");
    if (config_.max_attempts < 1) throw ArgumentError("remote client: max attempts must be >= 1");
    if (!(config_.timeout_s > 0.0)) throw ArgumentError("remote client: timeout must be positive");
}

Json RemoteAnnotationClient::call(std::string_view stage, const std::string& asset_id, const Json& payload) {
    const std::string key = asset_id + "/" + std::string(stage);
    const Json request{{"stage", stage}, {"asset_id", asset_id}, {"idempotency_key", key}, {"payload", payload}};
    const std::string body = request.dump();
    const std::string path = std::string(kAnnotatePath) + std::string(stage);

    {
        std::unique_lock lock(mutex_);
        slot_free_.wait(lock, [&] { return in_flight_ < config_.max_in_flight; });
        ++in_flight_;
    }
    struct Release {
        RemoteAnnotationClient* self;
        ~Release() {
            {
                std::lock_guard lock(self->mutex_);
                --self->in_flight_;
            }
            self->slot_free_.notify_one();
        }
    } release{this};

    const auto secs = static_cast<time_t>(config_.timeout_s);
    const auto usecs = static_cast<time_t>((config_.timeout_s - static_cast<double>(secs)) * 1e6);
    std::string last_error;
    int backoff = config_.backoff_ms;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
            backoff *= 2;
        }
        httplib::Client cli(config_.base_url);
        cli.set_connection_timeout(secs, usecs);
        cli.set_read_timeout(secs, usecs);
        cli.set_write_timeout(secs, usecs);
        auto res = cli.Post(path, httplib::Headers{{"Idempotency-Key", key}}, body, "application/json");
        if (!res) {
            last_error = "request failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw TransportError(std::string(stage) + " for '" + asset_id + "': HTTP " + std::to_string(res->status) +
                                 ": " + res->body);
        try {
            const Json doc = parse_json_text(res->body, "response");
            const FieldReader r(doc, "");
            if (r.string("stage") != stage) r.fail("stage", "does not echo the request");
            if (r.string("asset_id") != asset_id) r.fail("asset_id", "does not echo the request");
            r.child("response");
            return doc.at("response");
        } catch (const Error& e) {
            throw TransportError(std::string(stage) + " for '" + asset_id + "': malformed response: " + e.what());
        }
    }
    throw TransportError(std::string(stage) + " for '" + asset_id + "': gave up after " +
                         std::to_string(config_.max_attempts) + " attempts (" + last_error + ")");
}

Json RemoteAnnotationClient::asset_payload(const AssetView& asset) const {
    if (asset.mesh == nullptr) throw ArgumentError("remote client: no mesh for asset '" + asset.asset_id + "'");
    Json views = Json::array();
    for (const RenderView& v : asset.views) {
        Json jv{{"view_index", v.view_index},
                {"width", v.width},
                {"height", v.height},
                {"camera", {{"direction", vec3_json(v.camera.direction)}, {"up", vec3_json(v.camera.up)}}}};
        if (config_.send_views) jv["png_base64"] = httplib::detail::base64_encode(encode_png(v));
        views.push_back(std::move(jv));
    }
    return Json{{"mesh", mesh_to_json(*asset.mesh)}, {"views", std::move(views)}};
}

namespace {

template <typename T, typename F>
T decode(std::string_view stage, const std::string& asset_id, const Json& response, F&& read) {
    try {
        return read(FieldReader(response, "response"));
    } catch (const Error& e) {
        throw TransportError(std::string(stage) + " for '" + asset_id + "': schema mismatch: " + e.what());
    }
}

}  // namespace

GateResult RemoteAnnotationClient::quality_gate(const AssetView& asset) {
    if (asset.views.empty()) throw ArgumentError("quality_gate: no rendered views");
    const Json resp = call("quality_gate", asset.asset_id, asset_payload(asset));
    return decode<GateResult>("quality_gate", asset.asset_id, resp, gate_result_from);
}

PropertyEstimate RemoteAnnotationClient::estimate_properties(const AssetView& asset) {
    const Json resp = call("estimate_properties", asset.asset_id, asset_payload(asset));
    return decode<PropertyEstimate>("estimate_properties", asset.asset_id, resp, [](const FieldReader& r) {
        PropertyEstimate p = property_estimate_from(r);
        validate(p.physical, r.path() + ".physical");
        return p;
    });
}

SemanticCaption RemoteAnnotationClient::caption(const AssetView& asset) {
    const Json resp = call("caption", asset.asset_id, asset_payload(asset));
    return decode<SemanticCaption>("caption", asset.asset_id, resp, [](const FieldReader& r) {
        SemanticCaption c = caption_from(r);
        validate(c, r.path());
        return c;
    });
}

PointSelection RemoteAnnotationClient::select_points(const AssetView& asset, const PointCloud& candidates) {
    Json payload = asset_payload(asset);
    payload["candidates"] = cloud_to_json(candidates);
    const Json resp = call("select_points", asset.asset_id, payload);
    return decode<PointSelection>("select_points", asset.asset_id, resp, [&](const FieldReader& r) {
        PointSelection s = point_selection_from(r);
        for (Index i : s.functional_candidates)
            if (i < 0 || i >= candidates.size()) r.fail("functional_candidates", "candidate index out of range");
        for (Index i : s.grasp_candidates)
            if (i < 0 || i >= candidates.size()) r.fail("grasp_candidates", "candidate index out of range");
        return s;
    });
}

std::vector<GraspPose> RemoteAnnotationClient::propose_grasps(const AssetView& asset, const PointCloud& cloud,
                                                              const GripperModel& gripper, int max_n,
                                                              std::uint64_t seed) {
    if (max_n < 1) throw ArgumentError("propose_grasps: max_n must be >= 1");
    if (!cloud.has_normals()) throw ArgumentError("propose_grasps: cloud has no normals");
    const Json payload{{"cloud", cloud_to_json(cloud)}, {"gripper", to_json(gripper)}, {"max_n", max_n}, {"seed", seed}};
    const Json resp = call("propose_grasps", asset.asset_id, payload);
    return decode<std::vector<GraspPose>>("propose_grasps", asset.asset_id, resp, [&](const FieldReader& r) {
        std::vector<GraspPose> out;
        for (const auto& g : r.array("grasps")) {
            out.push_back(grasp_pose_from(g));
            validate(out.back(), g.path());
        }
        if (static_cast<int>(out.size()) > max_n) r.fail("grasps", "more grasps than requested");
        return out;
    });
}

// --- stub server ---------------------------------------------------------------------

struct StubAnnotationServer::Impl {
    std::shared_ptr<AnnotationClient> backend;
    httplib::Server server;
    std::thread thread;
    std::string host;
    int port = 0;

    std::mutex mutex;
    std::map<std::string, std::string> replay;  // idempotency key -> response body
    int pending_failures = 0;
    int failure_status = 503;
    std::function<void(std::string_view, Json&)> hook;

    std::atomic<int> requests{0};
    std::atomic<int> calls{0};
    std::atomic<int> active{0};
    std::atomic<int> peak{0};

    Json dispatch(const std::string& stage, const std::string& asset_id, const FieldReader& payload);
    void handle(const httplib::Request& req, httplib::Response& res);
};

namespace {

std::vector<RenderView> placeholder_views(const FieldReader& payload) {
    std::vector<RenderView> views;
    for (const auto& v : payload.array("views")) {
        RenderView view;
        view.view_index = static_cast<int>(v.integer("view_index"));
        view.width = static_cast<int>(v.integer("width"));
        view.height = static_cast<int>(v.integer("height"));
        if (view.width < 0 || view.height < 0 || view.width > 8192 || view.height > 8192)
            v.fail("width", "implausible view size");
        view.pixels.assign(static_cast<std::size_t>(3 * view.width * view.height), kBackground);
        const FieldReader cam = v.child("camera");
        view.camera.direction = cam.vec3("direction");
        view.camera.up = cam.vec3("up");
        views.push_back(std::move(view));
    }
    return views;
}

}  // namespace

Json StubAnnotationServer::Impl::dispatch(const std::string& stage, const std::string& asset_id,
                                          const FieldReader& payload) {
    if (stage == "propose_grasps") {
        const PointCloud cloud = cloud_from(payload.child("cloud"));
        const GripperModel gripper = gripper_from(payload.child("gripper"));
        const auto max_n = static_cast<int>(payload.integer("max_n"));
        const std::uint64_t seed = payload.unsigned_integer("seed");
        ++calls;
        AssetView view{asset_id, nullptr, {}};
        Json grasps = Json::array();
        for (const GraspPose& g : backend->propose_grasps(view, cloud, gripper, max_n, seed)) grasps.push_back(to_json(g));
        return Json{{"grasps", std::move(grasps)}};
    }

    const TriMesh mesh = mesh_from(payload.child("mesh"));
    const std::vector<RenderView> views = placeholder_views(payload);
    const AssetView view{asset_id, &mesh, views};
    ++calls;
    if (stage == "quality_gate") return to_json(backend->quality_gate(view));
    if (stage == "estimate_properties") return to_json(backend->estimate_properties(view));
    if (stage == "caption") return to_json(backend->caption(view));
    if (stage == "select_points") return to_json(backend->select_points(view, cloud_from(payload.child("candidates"))));
    --calls;
    throw NotFoundError("unknown stage '" + stage + "'");
}

void StubAnnotationServer::Impl::handle(const httplib::Request& req, httplib::Response& res) {
    ++requests;
    const int now = ++active;
    for (int p = peak.load(); now > p && !peak.compare_exchange_weak(p, now);) {
    }
    struct Leave {
        std::atomic<int>& a;
        ~Leave() { --a; }
    } leave{active};

    const std::string stage = req.path_params.at("stage");
    auto error = [&](int status, const std::string& what) {
        res.status = status;
        res.set_content(Json{{"error", what}}.dump(), "application/json");
    };
    {
        std::lock_guard lock(mutex);
        if (pending_failures > 0) {
            --pending_failures;
            return error(failure_status, "injected failure");
        }
    }

    const std::string key = req.get_header_value("Idempotency-Key");
    if (!key.empty()) {
        std::lock_guard lock(mutex);
        if (auto it = replay.find(key); it != replay.end()) {
            res.set_content(it->second, "application/json");
            return;
        }
    }

    try {
        const Json doc = parse_json_text(req.body, "request");
        const FieldReader r(doc, "");
        if (r.string("stage") != stage) r.fail("stage", "does not match the URL");
        const std::string asset_id = r.string("asset_id");
        Json response = dispatch(stage, asset_id, r.child("payload"));
        std::function<void(std::string_view, Json&)> h;
        {
            std::lock_guard lock(mutex);
            h = hook;
        }
        if (h) h(stage, response);
        const std::string body = Json{{"stage", stage}, {"asset_id", asset_id}, {"response", std::move(response)}}.dump();
        if (!key.empty()) {
            std::lock_guard lock(mutex);
            replay.emplace(key, body);
        }
        res.set_content(body, "application/json");
    } catch (const ParseError& e) {
        error(400, e.what());
    } catch (const NotFoundError& e) {
        error(404, e.what());
    } catch (const Error& e) {
        error(422, e.what());
    }
}

StubAnnotationServer::StubAnnotationServer(std::shared_ptr<AnnotationClient> backend) : impl_(std::make_unique<Impl>()) {
    if (!backend) throw ArgumentError("stub server: no backend");
    impl_->backend = std::move(backend);
    impl_->server.Post(std::string(kAnnotatePath) + ":stage",
                       [this](const httplib::Request& req, httplib::Response& res) { impl_->handle(req, res); });
}

StubAnnotationServer::~StubAnnotationServer() { stop(); }

int StubAnnotationServer::start(const std::string& host, int port) {
    impl_->host = host;
    impl_->port = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (impl_->port <= 0) throw TransportError("stub server: cannot bind " + host + ":" + std::to_string(port));
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return impl_->port;
}

void StubAnnotationServer::listen(const std::string& host, int port) {
    impl_->host = host;
    impl_->port = port;
    if (!impl_->server.listen(host, port))
        throw TransportError("stub server: cannot listen on " + host + ":" + std::to_string(port));
}

void StubAnnotationServer::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

std::string StubAnnotationServer::base_url() const {
    return "http://" + impl_->host + ":" + std::to_string(impl_->port);
}

void StubAnnotationServer::fail_next(int count, int status) {
    std::lock_guard lock(impl_->mutex);
    impl_->pending_failures = count;
    impl_->failure_status = status;
}

void StubAnnotationServer::set_response_hook(std::function<void(std::string_view, Json&)> hook) {
    std::lock_guard lock(impl_->mutex);
    impl_->hook = std::move(hook);
}

int StubAnnotationServer::requests_seen() const { return impl_->requests; }
int StubAnnotationServer::backend_calls() const { return impl_->calls; }
int StubAnnotationServer::max_concurrent() const { return impl_->peak; }

std::shared_ptr<AnnotationClient> make_client(const std::string& mode, const MockConfig& mock,
                                              const RemoteConfig& remote) {
    if (mode == "mock") return std::make_shared<MockAnnotationClient>(mock);
    if (mode == "remote") {
        RemoteConfig cfg = remote;
        if (cfg.base_url.empty())
            cfg.base_url = annotation_url_from_env().value_or("");
        if (cfg.base_url.empty())
            throw ArgumentError(std::string("remote clients need a base URL (set ") + kAnnotationUrlEnv + ")");
        return std::make_shared<RemoteAnnotationClient>(cfg);
    }
    throw ArgumentError("unknown client mode '" + mode + "' (expected mock or remote)");
}

}  // namespace manitwin
