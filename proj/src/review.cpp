#include "manitwin/review.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "manitwin/errors.hpp"
#include "manitwin/geometry/random.hpp"
#include "manitwin/io_util.hpp"
#include "manitwin/pipeline.hpp"

namespace manitwin {

namespace fs = std::filesystem;

Json to_json(const ReviewVerdict& v) {
    Json ratings = Json::object();
    for (std::size_t d = 0; d < kReviewDimensions.size(); ++d)
        ratings[std::string(kReviewDimensions[d])] = v.correct[d] ? "correct" : "incorrect";
    Json j{{"asset_id", v.asset_id},
           {"ratings", std::move(ratings)},
           {"overall", v.accept ? "accept" : "reject"},
           {"reviewer_id", v.reviewer_id},
           {"timestamp", v.timestamp}};
    if (!v.note.empty()) j["note"] = v.note;
    return j;
}

ReviewVerdict verdict_from(const FieldReader& r) {
    ReviewVerdict v;
    if (r.has("asset_id")) v.asset_id = r.string("asset_id");
    if (r.has("reviewer_id")) v.reviewer_id = r.string("reviewer_id");
    if (r.has("timestamp")) v.timestamp = r.string("timestamp");
    if (r.has("note")) v.note = r.string("note");

    if (!r.has("ratings")) throw ValidationError("ratings", "all five ratings are required");
    const FieldReader ratings = r.child("ratings");
    if (!ratings.node().is_object()) r.fail("ratings", "expected an object");
    for (const auto& [key, value] : ratings.node().items()) {
        if (std::find(kReviewDimensions.begin(), kReviewDimensions.end(), key) == kReviewDimensions.end())
            throw ValidationError("ratings." + key, "unknown dimension");
    }
    for (std::size_t d = 0; d < kReviewDimensions.size(); ++d) {
        const std::string_view dim = kReviewDimensions[d];
        const std::string path = "ratings." + std::string(dim);
        if (!ratings.has(dim)) throw ValidationError(path, "missing rating");
        const std::string value = ratings.string(dim);
        if (value != "correct" && value != "incorrect")
            throw ValidationError(path, "must be correct or incorrect, got '" + value + "'");
        v.correct[d] = value == "correct";
    }
    if (!r.has("overall")) throw ValidationError("overall", "required");
    const std::string overall = r.string("overall");
    if (overall != "accept" && overall != "reject")
        throw ValidationError("overall", "must be accept or reject, got '" + overall + "'");
    v.accept = overall == "accept";
    return v;
}

void validate(const ReviewVerdict& v) {
    if (v.asset_id.empty()) throw ValidationError("asset_id", "required");
    if (v.reviewer_id.empty()) throw ValidationError("reviewer_id", "required");
    const bool any_incorrect = std::find(v.correct.begin(), v.correct.end(), false) != v.correct.end();
    if (!v.accept && !any_incorrect && v.note.empty())
        throw ValidationError("overall", "a reject needs at least one incorrect rating or a note");
}

Json to_json(const AccuracyReport& a) {
    const auto pct = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
    Json acc = Json::object();
    for (std::size_t d = 0; d < kReviewDimensions.size(); ++d) acc[std::string(kReviewDimensions[d])] = pct(a.percent[d]);
    return Json{{"verdicts", a.verdicts}, {"accuracy_percent", std::move(acc)}, {"accept_percent", pct(a.accept_percent)}};
}

Json to_json(const QueuePage& p) {
    Json items = Json::array();
    for (const auto& i : p.items)
        items.push_back({{"asset_id", i.asset_id},
                         {"thumbnail_url", i.thumbnail_url},
                         {"stage_status", i.stage_status},
                         {"pending", i.pending}});
    return Json{{"items", std::move(items)},
                {"page", p.page},
                {"page_size", p.page_size},
                {"total", p.total},
                {"pages", p.pages}};
}

namespace {

std::string render_url(const std::string& id, int k) {
    return "/api/v1/assets/" + id + "/renders/" + std::to_string(k) + ".png";
}

}  // namespace

ReviewStore::ReviewStore(fs::path root, double sample_rate, std::uint64_t seed)
    : root_(std::move(root)), sample_rate_(sample_rate), seed_(seed) {
    if (!(sample_rate >= 0.0 && sample_rate <= 1.0)) throw ArgumentError("review sample rate must be in [0, 1]");
    reload();
}

void ReviewStore::reload() {
    std::unique_lock lock(mutex_);
    const StorePaths store{root_};
    annotated_.clear();
    verdicts_.clear();
    for (const std::string& id : list_assets(root_)) {
        if (!fs::exists(store.manifest(id))) continue;
        annotated_.push_back(id);
        const fs::path vf = store.verdicts(id);
        if (!fs::exists(vf)) continue;
        std::ifstream in(vf);
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            const std::string source = vf.string() + ":" + std::to_string(line_no);
            ReviewVerdict v = verdict_from(FieldReader(parse_json_text(line, source), ""));
            verdicts_[id].push_back(std::move(v));
        }
    }
}

bool ReviewStore::annotated(const std::string& id) const {
    return std::binary_search(annotated_.begin(), annotated_.end(), id);
}

bool ReviewStore::in_sample(const std::string& asset_id) const {
    const double u = static_cast<double>(derive_seed(seed_, asset_id) >> 11) * 0x1.0p-53;
    return u < sample_rate_;
}

QueuePage ReviewStore::pending(int page, int page_size) const {
    if (page < 1) throw ArgumentError("page must be >= 1");
    if (page_size < 1 || page_size > 200) throw ArgumentError("page_size must be in [1, 200]");
    std::shared_lock lock(mutex_);
    std::vector<std::string> ids;
    for (const std::string& id : annotated_)
        if (in_sample(id) && !verdicts_.contains(id)) ids.push_back(id);
    QueuePage out;
    out.page = page;
    out.page_size = page_size;
    out.total = static_cast<std::int64_t>(ids.size());
    out.pages = static_cast<int>((ids.size() + static_cast<std::size_t>(page_size) - 1) / static_cast<std::size_t>(page_size));
    const std::size_t begin = static_cast<std::size_t>(page - 1) * static_cast<std::size_t>(page_size);
    for (std::size_t i = begin; i < ids.size() && i < begin + static_cast<std::size_t>(page_size); ++i)
        out.items.push_back({ids[i], render_url(ids[i], 0), "ok", true});
    return out;
}

Json ReviewStore::detail(const std::string& asset_id) const {
    std::shared_lock lock(mutex_);
    if (!annotated(asset_id)) throw NotFoundError("unknown asset '" + asset_id + "'");
    const StorePaths store{root_};
    Json out;
    out["asset_id"] = asset_id;
    out["in_sample"] = in_sample(asset_id);
    const auto it = verdicts_.find(asset_id);
    out["pending"] = out["in_sample"].get<bool>() && it == verdicts_.end();
    out["manifest"] = parse_json_text(read_text_file(store.manifest(asset_id)), "manifest");
    Json renders = Json::array();
    for (int k = 0; fs::exists(store.render(asset_id, k)); ++k) renders.push_back(render_url(asset_id, k));
    out["renders"] = std::move(renders);
    out["grasp_outcomes"] = fs::exists(store.candidates(asset_id))
                                ? parse_json_text(read_text_file(store.candidates(asset_id)), "candidates")["grasps"]
                                : Json::array();
    out["stage_log"] = parse_json_text(read_text_file(store.stage_log(asset_id)), "stage_log");
    Json vs = Json::array();
    if (it != verdicts_.end())
        for (const auto& v : it->second) vs.push_back(to_json(v));
    out["verdicts"] = std::move(vs);
    return out;
}

std::string ReviewStore::render(const std::string& asset_id, int view) const {
    std::shared_lock lock(mutex_);
    if (!annotated(asset_id)) throw NotFoundError("unknown asset '" + asset_id + "'");
    const fs::path p = StorePaths{root_}.render(asset_id, view);
    if (view < 0 || !fs::exists(p)) throw NotFoundError("no render " + std::to_string(view) + " for " + asset_id);
    return read_text_file(p);
}

ReviewVerdict ReviewStore::submit(ReviewVerdict v) {
    std::unique_lock lock(mutex_);
    if (!annotated(v.asset_id)) throw NotFoundError("unknown asset '" + v.asset_id + "'");
    validate(v);
    if (const auto it = verdicts_.find(v.asset_id); it != verdicts_.end())
        for (const auto& existing : it->second)
            if (existing.reviewer_id == v.reviewer_id)
                throw ConflictError("reviewer '" + v.reviewer_id + "' already rated '" + v.asset_id + "'");
    if (v.timestamp.empty()) v.timestamp = utc_timestamp();
    const fs::path vf = StorePaths{root_}.verdicts(v.asset_id);
    {
        std::ofstream out(vf, std::ios::app);
        out << to_json(v).dump() << "\n";
        out.flush();
        if (!out) throw Error("cannot append to " + vf.string());
    }
    verdicts_[v.asset_id].push_back(v);
    return v;
}

std::vector<ReviewVerdict> ReviewStore::verdicts(const std::string& asset_id) const {
    std::shared_lock lock(mutex_);
    const auto it = verdicts_.find(asset_id);
    return it == verdicts_.end() ? std::vector<ReviewVerdict>{} : it->second;
}

AccuracyReport ReviewStore::accuracy() const {
    std::shared_lock lock(mutex_);
    AccuracyReport a;
    std::array<std::int64_t, 5> correct{};
    std::int64_t accepted = 0;
    for (const auto& [id, list] : verdicts_)
        for (const auto& v : list) {
            ++a.verdicts;
            for (std::size_t d = 0; d < correct.size(); ++d) correct[d] += v.correct[d] ? 1 : 0;
            accepted += v.accept ? 1 : 0;
        }
    if (a.verdicts == 0) return a;
    const auto n = static_cast<double>(a.verdicts);
    for (std::size_t d = 0; d < correct.size(); ++d) a.percent[d] = 100.0 * static_cast<double>(correct[d]) / n;
    a.accept_percent = 100.0 * static_cast<double>(accepted) / n;
    return a;
}

PipelineStats ReviewStore::pipeline_stats() const { return compute_stats(root_); }

struct ReviewServer::Impl {
    std::shared_ptr<ReviewStore> store;
    httplib::Server server;
    std::thread thread;

    void routes();
};

namespace {

void send_json(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
    send_json(res, status, Json{{"error", {{"code", code}, {"message", message}}}});
}

int int_param(const httplib::Request& req, const std::string& key, int fallback) {
    if (!req.has_param(key)) return fallback;
    const std::string v = req.get_param_value(key);
    try {
        std::size_t used = 0;
        const int n = std::stoi(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return n;
    } catch (const std::exception&) {
        throw ArgumentError("query parameter '" + key + "' must be an integer");
    }
}

// Maps library errors onto status codes.
template <typename F>
void guarded(httplib::Response& res, F&& f) {
    try {
        f();
    } catch (const NotFoundError& e) {
        send_error(res, 404, "not_found", e.what());
    } catch (const ConflictError& e) {
        send_error(res, 409, "conflict", e.what());
    } catch (const ValidationError& e) {
        Json body{{"error", {{"code", "validation"}, {"message", e.what()}, {"field", e.field()}}}};
        send_json(res, 422, body);
    } catch (const ParseError& e) {
        send_error(res, 400, "malformed", e.what());
    } catch (const ArgumentError& e) {
        send_error(res, 400, "bad_request", e.what());
    } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
    }
}

}  // namespace

void ReviewServer::Impl::routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type, X-Reviewer-Id"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.Options(R"(/api/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Get("/api/v1/health", [](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, Json{{"status", "ok"}});
    });

    server.Get("/api/v1/assets", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const QueuePage p = store->pending(int_param(req, "page", 1), int_param(req, "page_size", 20));
            send_json(res, 200, to_json(p));
        });
    });

    server.Get(R"(/api/v1/assets/([A-Za-z0-9_.\-]+))", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 200, store->detail(req.matches[1])); });
    });

    server.Get(R"(/api/v1/assets/([A-Za-z0-9_.\-]+)/renders/(\d+)\.png)",
               [this](const httplib::Request& req, httplib::Response& res) {
                   guarded(res, [&] {
                       const int view = std::stoi(req.matches[2]);
                       res.set_content(store->render(req.matches[1], view), "image/png");
                       res.status = 200;
                   });
               });

    server.Post(R"(/api/v1/assets/([A-Za-z0-9_.\-]+)/verdicts)",
                [this](const httplib::Request& req, httplib::Response& res) {
                    guarded(res, [&] {
                        const std::string id = req.matches[1];
                        const Json body = parse_json_text(req.body, "verdict");
                        if (!body.is_object()) throw ParseError("verdict: expected a JSON object");
                        ReviewVerdict v = verdict_from(FieldReader(body, ""));
                        if (!v.asset_id.empty() && v.asset_id != id)
                            throw ValidationError("asset_id", "does not match the URL");
                        v.asset_id = id;
                        const std::string header = req.get_header_value("X-Reviewer-Id");
                        if (!header.empty()) {
                            if (!v.reviewer_id.empty() && v.reviewer_id != header)
                                throw ValidationError("reviewer_id", "does not match the X-Reviewer-Id header");
                            v.reviewer_id = header;
                        }
                        // Timestamps are the server's to assign.
                        v.timestamp.clear();
                        send_json(res, 201, to_json(store->submit(std::move(v))));
                    });
                });

    server.Get("/api/v1/stats/accuracy", [this](const httplib::Request&, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 200, to_json(store->accuracy())); });
    });

    server.Get("/api/v1/stats/pipeline", [this](const httplib::Request&, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 200, to_json(store->pipeline_stats())); });
    });
}

ReviewServer::ReviewServer(std::shared_ptr<ReviewStore> store) : impl_(std::make_unique<Impl>()) {
    impl_->store = std::move(store);
    impl_->routes();
}

ReviewServer::~ReviewServer() { stop(); }

int ReviewServer::start(const std::string& host, int port) {
    const int bound =
        port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (bound <= 0) throw Error("review server: cannot bind " + host + ":" + std::to_string(port));
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void ReviewServer::listen(const std::string& host, int port) {
    if (!impl_->server.listen(host, port))
        throw Error("review server: cannot listen on " + host + ":" + std::to_string(port));
}

void ReviewServer::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace manitwin
