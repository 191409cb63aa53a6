#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "orbex/cli.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

fs::path scratch()
{
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("orbex-cli-" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

fs::path write_config(const std::string& name, const json& j)
{
    const fs::path p = scratch() / name;
    std::ofstream(p) << j.dump(2);
    return p;
}

Run run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = orbex::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

Run run_config(const json& j, std::vector<std::string> extra = {})
{
    std::vector<std::string> args{"--config", write_config("c.json", j).string()};
    args.insert(args.end(), extra.begin(), extra.end());
    return run(args);
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

json example41()
{
    return json{{"schema", "orbex-config/1"},
                {"command", "classify"},
                {"catalog", "example-4.1"},
                {"queries", json::array({json{{"kind", "roe"}, {"x", "sqrt2"}},
                                         json{{"kind", "oe"}, {"x", "1"}, {"d", "1"}}})},
                {"budget", json{{"seed", 3}}}};
}

} // namespace

TEST_CASE("classify example 4.1")
{
    const Run r = run_config(example41());
    REQUIRE(r.code == 0);
    const json rep = json::parse(r.out);
    CHECK(rep["schema"] == "orbex-report/1");
    CHECK(rep["command"] == "classify");
    const auto& res = rep["result"]["results"];
    REQUIRE(res.size() == 2);
    CHECK(res[0]["status"] == "Supported");
    CHECK(res[1]["status"] == "Refuted");
    CHECK(res[1]["certificate"]["kind"] == "UniformBound");
    CHECK(res[1]["certificate"]["bound"] == "2");
    CHECK(res[1]["certificate"]["level"] == "1/4");
    // wall time is kept out of the report
    CHECK(r.out.find("wall") == std::string::npos);
    CHECK(r.err.find("wall time") != std::string::npos);
}

TEST_CASE("missing budget is a config error")
{
    json c = example41();
    c.erase("budget");
    CHECK(run_config(c).code == 2);
    c["command"] = "scan";
    c.erase("queries");
    c["candidates"] = json::array({"0"});
    c["d"] = "1";
    CHECK(run_config(c).code == 2);
}

TEST_CASE("malformed configs exit 2")
{
    json c = example41();
    c["extra"] = 1;
    CHECK(run_config(c).code == 2);

    c = example41();
    c["budget"]["horizon"] = 1.5;
    CHECK(run_config(c).code == 2);

    c = example41();
    c["queries"][0]["x"] = 0.25;
    CHECK(run_config(c).code == 2);

    c = example41();
    c["schema"] = "orbex-config/2";
    CHECK(run_config(c).code == 2);

    c = example41();
    c["catalog"] = "example-9.9";
    CHECK(run_config(c).code == 2);

    c = example41();
    c["queries"][0]["d"] = "1";  // roe takes no d
    CHECK(run_config(c).code == 2);

    CHECK(run({"--config", (scratch() / "absent.json").string()}).code == 2);
    CHECK(run({}).code == 2);

    const fs::path junk = scratch() / "junk.json";
    std::ofstream(junk) << "{ not json";
    CHECK(run({"--config", junk.string()}).code == 2);

    json v{{"schema", "orbex-config/1"}, {"command", "verify"}, {"laws", json::array({"no-such-law"})}};
    CHECK(run_config(v).code == 2);
}

TEST_CASE("runtime failures exit 3")
{
    // x^3 does not map [0, 2] into itself.
    json c{{"schema", "orbex-config/1"},
           {"command", "classify"},
           {"system",
            {{"type", "restricted"},
             {"inner", {{"type", "iterated"}, {"map", {{"type", "cubic"}}}}},
             {"carrier", {{"type", "closed"}, {"lo", "0"}, {"hi", "2"}}}}},
           {"queries", json::array({json{{"kind", "roe"}, {"x", "1/2"}}})},
           {"budget", json::object()}};
    const Run r = run_config(c);
    CHECK(r.code == 3);
    CHECK(r.err.find("NotInvariant") != std::string::npos);
}

TEST_CASE("profile of the doubling map first exceeds 1 at n = 7")
{
    json c{{"schema", "orbex-config/1"}, {"command", "profile"}, {"catalog", "doubling-line"},
           {"x", "0"},                   {"y", "1/100"},         {"d", "1"},
           {"budget", {{"horizon", 10}}}};
    const fs::path csv = scratch() / "profile.csv";
    const Run r = run_config(c, {"--out", csv.string()});
    REQUIRE(r.code == 0);
    std::istringstream lines(slurp(csv));
    std::string line;
    std::getline(lines, line);
    CHECK(line == "n,separation_lo,separation_hi,certified");
    int first = 0, count = 0;
    while (std::getline(lines, line)) {
        ++count;
        if (!first && line.ends_with(",true"))
            first = std::stoi(line.substr(0, line.find(',')));
    }
    CHECK(count == 10);
    CHECK(first == 7);

    // the brute-force oracle: 2^n / 100 > 1 first at n = 7
    int oracle = 1;
    while ((1L << oracle) <= 100)
        ++oracle;
    CHECK(first == oracle);

    const Run j = run_config(c);
    REQUIRE(j.code == 0);
    CHECK(json::parse(j.out)["result"]["separation_time"] == 7);
}

TEST_CASE("csv is only for profile, and must agree with the extension")
{
    CHECK(run_config(example41(), {"--format", "csv"}).code == 2);
    CHECK(run_config(example41(), {"--out", (scratch() / "r.csv").string()}).code == 2);
    json c{{"schema", "orbex-config/1"}, {"command", "profile"}, {"catalog", "doubling-line"},
           {"x", "0"},                   {"y", "1/100"},         {"d", "1"},
           {"budget", {{"horizon", 4}}}};
    CHECK(run_config(c, {"--format", "json", "--out", (scratch() / "p.csv").string()}).code == 2);
}

TEST_CASE("same seed gives identical reports")
{
    json c = example41();
    c["queries"].push_back(json{{"kind", "expansive"}, {"points", json::array({"0", "1/3", "sqrt2"})}, {"d", "1"}});
    const Run a = run_config(c);
    const Run b = run_config(c);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
}

TEST_CASE("flags override the budget and are echoed")
{
    const Run r = run_config(example41(), {"--levels", "1", "--horizon", "16", "--seed", "9", "--eps-max", "1/4",
                                           "--samples", "5", "--workers", "2"});
    REQUIRE(r.code == 0);
    const json rep = json::parse(r.out);
    const json& b = rep["config"]["budget"];
    CHECK(b["levels"] == 1);
    CHECK(b["horizon"] == 16);
    CHECK(b["seed"] == 9);
    CHECK(b["eps_max"] == "1/4");
    CHECK(b["samples"] == 5);
    CHECK_FALSE(rep["config"].contains("workers"));
    // the uniform bound certificate does not depend on the grid
    CHECK(rep["result"]["results"][1]["status"] == "Refuted");

    CHECK(run_config(example41(), {"--levels", "0"}).code == 2);
    CHECK(run_config(example41(), {"--eps-max", "quarter"}).code == 2);
}

TEST_CASE("the echoed config reproduces the report")
{
    const Run a = run_config(example41(), {"--seed", "11", "--horizon", "20"});
    REQUIRE(a.code == 0);
    const json echo = json::parse(a.out)["config"];
    const fs::path p = write_config("echo.json", echo);
    const Run b = run({"--config", p.string()});
    REQUIRE(b.code == 0);
    CHECK(json::parse(b.out) == json::parse(a.out));
}

TEST_CASE("verify is identical across worker counts")
{
    json c{{"schema", "orbex-config/1"}, {"command", "verify"}};
    const Run one = run_config(c, {"--workers", "1"});
    const Run four = run_config(c, {"--workers", "4"});
    REQUIRE(one.code == 0);
    REQUIRE(four.code == 0);
    const std::string& a = one.out;
    CHECK(a == four.out);
    const json rep = json::parse(a);
    CHECK(rep["result"]["all_hold"] == true);
    CHECK(rep["result"]["laws"].size() == 10);
}

TEST_CASE("catalog command reports expected and observed")
{
    json c{{"schema", "orbex-config/1"}, {"command", "catalog"}, {"catalog", "example-5.1"}};
    const Run r = run_config(c);
    REQUIRE(r.code == 0);
    const json rep = json::parse(r.out);
    CHECK(rep["result"]["all_match"] == true);
    const auto& rows = rep["result"]["entries"][0]["rows"];
    REQUIRE(!rows.empty());
    CHECK(rows[0]["expected"] == "3");
    CHECK(rows[0]["observed"] == "3");
}

TEST_CASE("scan maps verdicts over candidates")
{
    json c{{"schema", "orbex-config/1"},
           {"command", "scan"},
           {"system", {{"type", "iterated"}, {"map", {{"type", "scaling"}, {"lambda", "1/2"}}}}},
           {"candidates", json::array({"0", "1", json{{"a", "0"}, {"b", "1"}}})},
           {"d", "1/4"},
           {"budget", json::object()}};
    const Run r = run_config(c);
    REQUIRE(r.code == 0);
    const json rep = json::parse(r.out);
    REQUIRE(rep["result"]["results"].size() == 3);
    for (const auto& row : rep["result"]["results"]) {
        CHECK(row["oe"]["status"] == "Refuted");
        CHECK(row["roe"]["status"] == "Refuted");
    }
}
