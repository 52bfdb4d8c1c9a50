#include <doctest.h>

#include <array>
#include <cstdio>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "manitwin/io_util.hpp"
#include "manitwin/manifest.hpp"
#include "manitwin/pipeline.hpp"

using namespace manitwin;

namespace {

struct Run {
    int status = -1;
    std::string out;
};

Run cli(const std::string& args) {
    const std::string cmd = std::string(MANITWIN_CLI) + " " + args + " 2>/dev/null";
    Run r;
    FILE* p = ::popen(cmd.c_str(), "r");
    REQUIRE(p);
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    const int raw = ::pclose(p);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

}  // namespace

TEST_CASE("command line round trip over a small store") {
    const fs::path dir = fs::temp_directory_path() / ("manitwin_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    const std::string in = (dir / "in").string(), store = "--store " + (dir / "store").string();

    Run r = cli("--seed 4 make-fixtures --out " + in + " --count 6 --gate-failures 1");
    REQUIRE(r.status == 0);
    CHECK(Json::parse(r.out)["ids"] == 6);

    r = cli(store + " --seed 4 run --input " + in);
    REQUIRE(r.status == 0);
    const Json summary = Json::parse(r.out);
    CHECK(summary["counts"]["ingested"] == 6);
    CHECK(summary["counts"]["gated"] == 5);
    CHECK(summary["executed_stages"].get<int>() > 0);

    r = cli(store + " --seed 4 run");
    REQUIRE(r.status == 0);
    CHECK(Json::parse(r.out)["executed_stages"] == 0);

    r = cli(store + " stats");
    REQUIRE(r.status == 0);
    CHECK(Json::parse(r.out)["counts"] == summary["counts"]);

    std::string id;
    for (const Json& a : summary["assets"])
        if (id.empty() && a["status"] == "ok") id = a["asset_id"].get<std::string>();
    REQUIRE_FALSE(id.empty());
    const AssetRecord rec = load_manifest(StorePaths{dir / "store"}.manifest(id));
    r = cli(store + " verify --asset " + id);
    REQUIRE(r.status == 0);
    CHECK(Json::parse(r.out)["verified"] == rec.provenance.counts.verified);
    r = cli(store + " verify --asset " + id + " --mu 0");
    REQUIRE(r.status == 0);
    CHECK(Json::parse(r.out)["verified"] == 0);

    const std::string layout = (dir / "layout.json").string();
    r = cli(store + " --seed 2 layout --num-objects 3 -o " + layout);
    REQUIRE(r.status == 0);
    const Json l = Json::parse(read_text_file(layout));
    CHECK(l["placements"].size() == 3);
    CHECK(l["scene_id"] == "scene_2");

    r = cli(store + " layout --assets " + id);
    REQUIRE(r.status == 0);
    CHECK(Json::parse(r.out)["provenance"]["selection"] == "explicit");
    CHECK(cli(store + " layout --assets nope").status != 0);

    r = cli(store + " vqa --layout " + layout + " --per-category 2");
    REQUIRE(r.status == 0);
    std::istringstream lines(r.out);
    std::string line;
    int pairs = 0;
    while (std::getline(lines, line)) {
        const Json p = Json::parse(line);
        CHECK(p["scene_id"] == "scene_2");
        ++pairs;
    }
    CHECK(pairs == 10);

    CHECK(cli(store + " verify --asset missing").status != 0);
    CHECK(cli("--clients nowhere stats").status != 0);
    CHECK(cli("").status != 0);
    fs::remove_all(dir);
}
