#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "preduce/problem.hpp"

using namespace preduce;
namespace fs = std::filesystem;

namespace {

std::string bin_path() {
    const char* p = std::getenv("PREDUCE_BIN");
    REQUIRE_MESSAGE(p != nullptr, "PREDUCE_BIN must point at the CLI binary");
    return p;
}

std::string fixtures_dir() {
    const char* p = std::getenv("PREDUCE_FIXTURES");
    REQUIRE_MESSAGE(p != nullptr, "PREDUCE_FIXTURES must point at the fixture directory");
    return p;
}

fs::path scratch_dir() {
    fs::path d = fs::temp_directory_path() / ("preduce_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

struct RunResult {
    int code;
    std::string out;
};

RunResult run(const std::string& args, const std::string& tag) {
    static fs::path scratch = scratch_dir();
    fs::path outfile = scratch / (tag + ".out");
    std::string cmd = bin_path() + " " + args + " > " + outfile.string() + " 2> /dev/null";
    int status = std::system(cmd.c_str());
    return {WEXITSTATUS(status), slurp(outfile)};
}

} // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("check: fixtures pass with exit 0") {
    auto r = run("check " + fixtures_dir() + "/so3.json", "check_so3");
    CHECK(r.code == 0);
    CHECK(r.out.find("overall: PASS") != std::string::npos);
}

TEST_CASE("check: corrupted tensor fails Jacobi with exit 1 and a witness") {
    fs::path bad = scratch_dir() / "bad_so3.json";
    std::string text = slurp(fixtures_dir() + std::string("/so3.json"));
    // corrupt B^{12}: -x3 -> -x3 + x1*x3
    auto pos = text.find("\"-x3\"");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 5, "\"-x3 + x1*x3\"");
    spit(bad, text);
    auto r = run("check " + bad.string(), "check_bad");
    CHECK(r.code == 1);
    CHECK(r.out.find("[FAIL] jacobi") != std::string::npos);
    CHECK(r.out.find(" at (") != std::string::npos);
    CHECK(r.out.find("overall: FAIL") != std::string::npos);
}

TEST_CASE("check: the all-zero tensor is a valid (trivial) Poisson structure") {
    fs::path trivial = scratch_dir() / "trivial.json";
    spit(trivial, R"({"schema": 1, "chart": ["a", "b"], "poisson_tensor": []})");
    auto r = run("check " + trivial.string(), "check_trivial");
    CHECK(r.code == 0);
}

TEST_CASE("check: malformed input exits 2") {
    fs::path bad = scratch_dir() / "malformed.json";
    spit(bad, "{ not json");
    CHECK(run("check " + bad.string(), "check_malformed").code == 2);

    fs::path bad2 = scratch_dir() / "bad_expr.json";
    spit(bad2, R"({"schema": 1, "chart": ["a", "b"], "hamiltonian": "a + unknown_name"})");
    CHECK(run("check " + bad2.string(), "check_badexpr").code == 2);

    CHECK(run("check " + (scratch_dir() / "missing_file.json").string(), "check_missing").code == 2);
}

TEST_CASE("classify: labels for the fixture constraint sets") {
    auto r1 = run("classify " + fixtures_dir() + "/canonical4.json --constraints secondclass", "cls1");
    CHECK(r1.code == 0);
    CHECK(r1.out.find("cosymplectic") != std::string::npos);

    auto r2 = run("classify " + fixtures_dir() + "/canonical4.json --constraints involution", "cls2");
    CHECK(r2.code == 0);
    CHECK(r2.out.find("coisotropic") != std::string::npos);

    auto r3 = run("classify " + fixtures_dir() + "/so3.json --constraints unit_sphere", "cls3");
    CHECK(r3.code == 0);
    CHECK(r3.out.find("poisson-submanifold") != std::string::npos);

    auto r4 = run("classify " + fixtures_dir() + "/canonical4.json --constraints no_such_set", "cls4");
    CHECK(r4.code == 2);
}

TEST_CASE("dirac: pair values and the Casimir pair") {
    auto r = run("dirac " + fixtures_dir() + "/canonical4.json --constraints secondclass"
                 " --pairs \"q1,p1\" --pairs \"q2,q1\"",
                 "dirac_pairs");
    CHECK(r.code == 0);
    CHECK(r.out.find("pair {q1, p1}") != std::string::npos);
    CHECK(r.out.find("values at first samples: 1, 1, 1, 1, 1") != std::string::npos);
    CHECK(r.out.find("values at first samples: 0, 0, 0, 0, 0") != std::string::npos);

    // default behavior: tensor dump
    auto rd = run("dirac " + fixtures_dir() + "/canonical4.json --constraints secondclass", "dirac_dump");
    CHECK(rd.code == 0);
    CHECK(rd.out.find("tangential_tensor") != std::string::npos);

    // first-class set refuses
    auto rf = run("dirac " + fixtures_dir() + "/canonical4.json --constraints involution", "dirac_first");
    CHECK(rf.code == 1);
    CHECK(rf.out.find("cosymplectic precondition") != std::string::npos);
}

TEST_CASE("dirac: curved fixture passes the property suite") {
    auto r = run("dirac " + fixtures_dir() + "/so3xr2.json --constraints mixed", "dirac_curved");
    CHECK(r.code == 0);
    CHECK(r.out.find("overall: PASS") != std::string::npos);
}

TEST_CASE("reduce: emits a definition accepted by check and flow") {
    fs::path reduced = scratch_dir() / "resonance.reduced.json";
    auto r = run("reduce " + fixtures_dir() + "/resonance.json --out " + reduced.string(), "reduce");
    CHECK(r.code == 0);
    CHECK(r.out.find("overall: PASS") != std::string::npos);

    auto rc = run("check " + reduced.string(), "reduce_check");
    CHECK(rc.code == 0);

    fs::path csv = scratch_dir() / "reduced_flow.csv";
    auto rf = run("flow " + reduced.string() + " --T 1 --dt 1e-3 --out " + csv.string(), "reduce_flow");
    CHECK(rf.code == 0);
    CHECK(slurp(csv).find("t,s0,s1,s2,s3") == 0);
}

TEST_CASE("reduce: corrupted closure fails with a witness") {
    fs::path bad = scratch_dir() / "bad_resonance.json";
    std::string text = slurp(fixtures_dir() + std::string("/resonance.json"));
    auto pos = text.find("\"2*s3\"");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 6, "\"-2*s3\"");
    spit(bad, text);
    auto r = run("reduce " + bad.string(), "reduce_bad");
    CHECK(r.code == 1);
    CHECK(r.out.find("[FAIL] closure") != std::string::npos);
}

TEST_CASE("reduce: --discover fits the closure from samples") {
    fs::path nolam = scratch_dir() / "resonance_noclosure.json";
    std::string text = slurp(fixtures_dir() + std::string("/resonance.json"));
    auto pos = text.find("\"closure\"");
    REQUIRE(pos != std::string::npos);
    auto end = text.find("],", pos);
    REQUIRE(end != std::string::npos);
    text.replace(pos, end + 2 - pos, "\"closure\": [],");
    spit(nolam, text);
    auto r = run("reduce " + nolam.string() + " --discover --out " +
                     (scratch_dir() / "discovered.reduced.json").string(),
                 "reduce_discover");
    CHECK(r.code == 0);
    CHECK(r.out.find("closure discovery") != std::string::npos);
    CHECK(r.out.find("overall: PASS") != std::string::npos);
}

TEST_CASE("flow: T = 0 emits a single data row") {
    fs::path csv = scratch_dir() / "t0.csv";
    auto r = run("flow " + fixtures_dir() + "/harmonic.json --T 0 --out " + csv.string(), "flow_t0");
    CHECK(r.code == 0);
    std::string text = slurp(csv);
    CHECK(std::count(text.begin(), text.end(), '\n') == 2); // header + one row
    CHECK(text.find("0,1,0,0.5") != std::string::npos);
}

TEST_CASE("flow: determinism of CSV bytes under a fixed seed") {
    fs::path a = scratch_dir() / "det_a.csv";
    fs::path b = scratch_dir() / "det_b.csv";
    auto ra = run("flow " + fixtures_dir() + "/so3.json --T 2 --dt 1e-3 --seed 7 --out " + a.string(), "det_a");
    auto rb = run("flow " + fixtures_dir() + "/so3.json --T 2 --dt 1e-3 --seed 7 --out " + b.string(), "det_b");
    CHECK(ra.code == 0);
    CHECK(rb.code == 0);
    CHECK(ra.out == rb.out);
    CHECK(slurp(a) == slurp(b));
    CHECK(!slurp(a).empty());
}

TEST_CASE("json reports parse and carry the same verdицt") {
    auto r = run("check " + fixtures_dir() + "/so3.json --json", "json_check");
    CHECK(r.code == 0);
    CHECK(r.out.find("\"overall\": true") != std::string::npos);
    CHECK(r.out.find("\"schema\": 1") != std::string::npos);
}

TEST_SUITE_END();
