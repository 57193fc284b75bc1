#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace {

int run(const std::string& args) {
    std::string cmd = std::string(PTT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("randgen is deterministic byte for byte") {
    REQUIRE(run("--seed 7 randgen --k 2 --ds 2 --rank 4 --out /tmp/ptt_a.json") == 0);
    REQUIRE(run("--seed 7 randgen --k 2 --ds 2 --rank 4 --out /tmp/ptt_b.json") == 0);
    CHECK(slurp("/tmp/ptt_a.json") == slurp("/tmp/ptt_b.json"));
    nlohmann::json j = nlohmann::json::parse(slurp("/tmp/ptt_a.json"));
    CHECK(j.contains("provenance"));
    CHECK(j["provenance"]["seed"] == 7);
}

TEST_CASE("simulate, fit, validate pipeline on exact data") {
    REQUIRE(run("--seed 3 spec --fixture heisenberg --k 2 --out /tmp/ptt_spec.json") == 0);
    REQUIRE(run("basis --kind ic --out /tmp/ptt_basis.json") == 0);
    REQUIRE(run("--seed 4 simulate --spec /tmp/ptt_spec.json --basis /tmp/ptt_basis.json "
                "--shots 0 --out /tmp/ptt_data.jsonl") == 0);
    REQUIRE(run("fit --data /tmp/ptt_data.jsonl --basis /tmp/ptt_basis.json --method mle "
                "--out /tmp/ptt_fit.json --report /tmp/ptt_fitreport.json") == 0);
    REQUIRE(run("--seed 5 validate --pt /tmp/ptt_fit.json --spec /tmp/ptt_spec.json "
                "--count 20 --out /tmp/ptt_val.json") == 0);
    nlohmann::json val = nlohmann::json::parse(slurp("/tmp/ptt_val.json"));
    CHECK(val["median"].get<double>() >= 1.0 - 1e-8);
}

TEST_CASE("malformed json exits 1, acausal input exits 2") {
    {
        std::ofstream f("/tmp/ptt_broken.json");
        f << "{ not json";
    }
    CHECK(run("analyze --pt /tmp/ptt_broken.json --out /tmp/ptt_r.json") == 1);

    // an acausal 'process tensor': maximally mixed replaced by a skewed state
    nlohmann::json pt = nlohmann::json::parse(slurp("/tmp/ptt_a.json"));
    nlohmann::json choi = pt["choi"];
    auto re = choi["re"].get<std::vector<double>>();
    re[1] += 0.4; // breaks hermiticity/causality
    auto im = choi["im"].get<std::vector<double>>();
    im[1 * 32 + 0] -= 0.4;
    choi["re"] = re;
    choi["im"] = im;
    pt["choi"] = choi;
    {
        std::ofstream f("/tmp/ptt_acausal.json");
        f << pt.dump();
    }
    CHECK(run("analyze --pt /tmp/ptt_acausal.json --out /tmp/ptt_r.json") == 2);
}

TEST_CASE("artifacts from one command feed the next unchanged") {
    REQUIRE(run("--seed 11 spec --fixture dephasing --k 2 --coupling 0.6 "
                "--out /tmp/ptt_dspec.json") == 0);
    REQUIRE(run("--seed 12 fit-cmo --spec /tmp/ptt_dspec.json --basis /tmp/ptt_basis.json "
                "--ell 1 --out /tmp/ptt_model.json") == 0);
    REQUIRE(run("optimize-dd --model /tmp/ptt_model.json --window 1 --budget 60 "
                "--out /tmp/ptt_gates.json") == 0);
    nlohmann::json gates = nlohmann::json::parse(slurp("/tmp/ptt_gates.json"));
    CHECK(gates.contains("objective"));
}
