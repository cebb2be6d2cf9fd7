#include "preduce/problem.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace preduce {

using ordered_json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& message) { throw InputError(message); }

Expression parse_field(const std::string& text, const ChartPtr& chart, const std::string& where) {
    try {
        return parse(text, chart);
    } catch (const ParseError& err) {
        fail(where + ": " + err.what() + " in \"" + text + "\"");
    }
}

Eigen::VectorXd to_vector(const ordered_json& arr, int n, const std::string& where) {
    if (!arr.is_array() || static_cast<int>(arr.size()) != n)
        fail(where + ": expected an array of " + std::to_string(n) + " numbers");
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) {
        if (!arr[static_cast<std::size_t>(i)].is_number()) fail(where + ": expected numbers");
        v[i] = arr[static_cast<std::size_t>(i)].get<double>();
    }
    return v;
}

} // namespace

PoissonOptions ProblemDefinition::poisson_options(std::uint64_t seed) const {
    PoissonOptions opts;
    opts.seed = seed;
    if (tolerances.antisymmetry) opts.antisymmetry_tol = *tolerances.antisymmetry;
    if (tolerances.jacobi) opts.jacobi_tol = *tolerances.jacobi;
    if (tolerances.rank) opts.rank_rel_tol = *tolerances.rank;
    opts.box_lo = sample_box.lo.minCoeff();
    opts.box_hi = sample_box.hi.maxCoeff();
    if (validation_points) opts.validation_samples = validation_points;
    return opts;
}

PoissonPtr ProblemDefinition::build_structure(std::uint64_t seed) const {
    return std::make_shared<PoissonStructure>(chart, tensor_entries, poisson_options(seed));
}

std::shared_ptr<ConstraintSet> ProblemDefinition::build_constraint_set(const std::string& name,
                                                                       const PoissonPtr& P) const {
    auto it = constraints.find(name);
    if (it == constraints.end()) fail("no constraint set named '" + name + "' in the definition file");
    if (seeds.empty()) fail("constraint sets require seed points in the definition file");
    return std::make_shared<ConstraintSet>(P, it->second, seeds);
}

QuotientSpec ProblemDefinition::build_quotient(const PoissonPtr& P) const {
    if (!quotient) fail("the definition file has no quotient section");
    return QuotientSpec(P, quotient->action_maps, quotient->generators, quotient->reduced_chart,
                        quotient->closure, quotient->relations);
}

ProblemDefinition parse_problem(const std::string& json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const nlohmann::json::exception& err) {
        fail(std::string("invalid JSON: ") + err.what());
    }
    if (!j.is_object()) fail("definition must be a JSON object");
    if (!j.contains("schema") || !j["schema"].is_number_integer() || j["schema"].get<int>() != 1)
        fail("definition requires \"schema\": 1");

    ProblemDefinition def;

    if (!j.contains("chart") || !j["chart"].is_array() || j["chart"].empty())
        fail("\"chart\" must be a non-empty array of coordinate names");
    std::vector<std::string> names;
    for (const auto& n : j["chart"]) {
        if (!n.is_string()) fail("\"chart\" entries must be strings");
        names.push_back(n.get<std::string>());
    }
    def.chart = make_chart(names);
    const int n = def.chart->dimension();

    def.tensor_entries.assign(static_cast<std::size_t>(n),
                              std::vector<Expression>(static_cast<std::size_t>(n), Expression(0.0)));
    if (j.contains("poisson_tensor")) {
        if (!j["poisson_tensor"].is_array()) fail("\"poisson_tensor\" must be an array of [i, j, expr] triples");
        for (const auto& row : j["poisson_tensor"]) {
            if (!row.is_array() || row.size() != 3 || !row[0].is_string() || !row[1].is_string() ||
                !row[2].is_string())
                fail("\"poisson_tensor\" entries must be [name_i, name_j, expression] string triples");
            int a = def.chart->index_of(row[0].get<std::string>());
            int b = def.chart->index_of(row[1].get<std::string>());
            if (a < 0 || b < 0)
                fail("poisson_tensor references unknown coordinate '" + row[0].get<std::string>() + "' or '" +
                     row[1].get<std::string>() + "'");
            if (a >= b) fail("poisson_tensor entries must use the strict upper triangle (i before j in chart order)");
            Expression e = parse_field(row[2].get<std::string>(), def.chart, "poisson_tensor");
            def.tensor_entries[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = e;
            def.tensor_entries[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = simplify(-e);
        }
    }

    if (j.contains("hamiltonian")) {
        if (!j["hamiltonian"].is_string()) fail("\"hamiltonian\" must be an expression string");
        def.hamiltonian = parse_field(j["hamiltonian"].get<std::string>(), def.chart, "hamiltonian");
    }

    if (j.contains("casimirs")) {
        if (!j["casimirs"].is_object()) fail("\"casimirs\" must map names to expression strings");
        for (const auto& [key, value] : j["casimirs"].items()) {
            if (!value.is_string()) fail("casimir '" + key + "' must be an expression string");
            def.casimirs.emplace_back(key, parse_field(value.get<std::string>(), def.chart, "casimirs." + key));
        }
    }

    if (j.contains("constraints")) {
        if (!j["constraints"].is_object()) fail("\"constraints\" must map names to arrays of expression strings");
        for (const auto& [key, value] : j["constraints"].items()) {
            if (!value.is_array() || value.empty()) fail("constraint set '" + key + "' must be a non-empty array");
            std::vector<Expression> list;
            for (const auto& s : value) {
                if (!s.is_string()) fail("constraint set '" + key + "' entries must be expression strings");
                list.push_back(parse_field(s.get<std::string>(), def.chart, "constraints." + key));
            }
            def.constraints.emplace(key, std::move(list));
        }
    }

    if (j.contains("seeds")) {
        if (!j["seeds"].is_array()) fail("\"seeds\" must be an array of points");
        for (const auto& s : j["seeds"]) def.seeds.push_back(to_vector(s, n, "seeds"));
    }

    def.sample_box = Box::cube(n, -2.0, 2.0);
    if (j.contains("sample_box")) {
        const auto& sb = j["sample_box"];
        if (sb.is_array() && sb.size() == 2 && sb[0].is_number() && sb[1].is_number()) {
            def.sample_box = Box::cube(n, sb[0].get<double>(), sb[1].get<double>());
        } else if (sb.is_array() && static_cast<int>(sb.size()) == n) {
            Eigen::VectorXd lo(n), hi(n);
            for (int i = 0; i < n; ++i) {
                const auto& pair = sb[static_cast<std::size_t>(i)];
                if (!pair.is_array() || pair.size() != 2) fail("\"sample_box\" per-coordinate entries must be [lo, hi]");
                lo[i] = pair[0].get<double>();
                hi[i] = pair[1].get<double>();
            }
            def.sample_box = Box{lo, hi};
        } else {
            fail("\"sample_box\" must be [lo, hi] or one [lo, hi] pair per coordinate");
        }
    }

    if (j.contains("validation_points")) {
        if (!j["validation_points"].is_array()) fail("\"validation_points\" must be an array of points");
        std::vector<Eigen::VectorXd> pts;
        for (const auto& p : j["validation_points"]) pts.push_back(to_vector(p, n, "validation_points"));
        def.validation_points = std::move(pts);
    }

    if (j.contains("tracked_quantities")) {
        if (!j["tracked_quantities"].is_object()) fail("\"tracked_quantities\" must map names to expressions");
        for (const auto& [key, value] : j["tracked_quantities"].items()) {
            if (!value.is_string()) fail("tracked quantity '" + key + "' must be an expression string");
            def.tracked.emplace_back(key, parse_field(value.get<std::string>(), def.chart,
                                                      "tracked_quantities." + key));
        }
    }

    if (j.contains("tolerances")) {
        const auto& t = j["tolerances"];
        if (!t.is_object()) fail("\"tolerances\" must be an object");
        auto get = [&](const char* key) -> std::optional<double> {
            if (!t.contains(key)) return std::nullopt;
            if (!t[key].is_number()) fail(std::string("tolerance '") + key + "' must be a number");
            return t[key].get<double>();
        };
        def.tolerances.antisymmetry = get("antisymmetry");
        def.tolerances.jacobi = get("jacobi");
        def.tolerances.rank = get("rank");
        def.tolerances.check = get("check");
    }

    if (j.contains("quotient")) {
        const auto& q = j["quotient"];
        if (!q.is_object()) fail("\"quotient\" must be an object");
        QuotientSection section;

        if (!q.contains("generators") || !q["generators"].is_object() || q["generators"].empty())
            fail("quotient requires \"generators\" mapping reduced names to ambient expressions");
        for (const auto& [key, value] : q["generators"].items()) {
            if (!value.is_string()) fail("generator '" + key + "' must be an expression string");
            section.generator_names.push_back(key);
            section.generators.push_back(parse_field(value.get<std::string>(), def.chart,
                                                     "quotient.generators." + key));
        }
        section.reduced_chart = make_chart(section.generator_names);
        const int m = section.reduced_chart->dimension();

        section.closure.assign(static_cast<std::size_t>(m),
                               std::vector<Expression>(static_cast<std::size_t>(m), Expression(0.0)));
        if (q.contains("closure")) {
            if (!q["closure"].is_array()) fail("\"closure\" must be an array of [a, b, expr] triples");
            for (const auto& row : q["closure"]) {
                if (!row.is_array() || row.size() != 3) fail("closure entries must be [name_a, name_b, expression]");
                int a = section.reduced_chart->index_of(row[0].get<std::string>());
                int b = section.reduced_chart->index_of(row[1].get<std::string>());
                if (a < 0 || b < 0) fail("closure references an unknown generator name");
                if (a == b) fail("closure diagonal entries are identically zero and must be omitted");
                Expression e =
                    parse_field(row[2].get<std::string>(), section.reduced_chart, "quotient.closure");
                section.closure[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = e;
                section.closure[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = simplify(-e);
            }
        }

        if (q.contains("relations")) {
            for (const auto& r : q["relations"])
                section.relations.push_back(
                    parse_field(r.get<std::string>(), section.reduced_chart, "quotient.relations"));
        }
        if (q.contains("reduced_hamiltonian")) {
            section.reduced_hamiltonian = parse_field(q["reduced_hamiltonian"].get<std::string>(),
                                                      section.reduced_chart, "quotient.reduced_hamiltonian");
        }

        if (!q.contains("action") || !q["action"].is_object())
            fail("quotient requires an \"action\" object (maps or a one-parameter family)");
        const auto& act = q["action"];
        if (act.contains("maps")) {
            for (const auto& mapj : act["maps"]) {
                if (!mapj.is_array() || static_cast<int>(mapj.size()) != n)
                    fail("each action map needs one expression per ambient coordinate");
                std::vector<Expression> comps;
                for (const auto& s : mapj)
                    comps.push_back(parse_field(s.get<std::string>(), def.chart, "quotient.action.maps"));
                section.action_maps.emplace_back(def.chart, def.chart, std::move(comps));
            }
        }
        if (act.contains("family")) {
            if (!act.contains("parameter") || !act["parameter"].is_string())
                fail("a one-parameter action family requires \"parameter\"");
            std::string param = act["parameter"].get<std::string>();
            std::vector<std::string> ext_names = def.chart->names();
            ext_names.push_back(param);
            ChartPtr ext = make_chart(ext_names);
            if (!act["family"].is_array() || static_cast<int>(act["family"].size()) != n)
                fail("\"family\" needs one expression per ambient coordinate");
            std::vector<Expression> family;
            for (const auto& s : act["family"])
                family.push_back(parse_field(s.get<std::string>(), ext, "quotient.action.family"));

            std::vector<double> values;
            if (act.contains("parameter_values")) {
                for (const auto& v : act["parameter_values"]) values.push_back(v.get<double>());
            } else {
                // default finite certificate: 8 equispaced values on [0, 2pi)
                int count = act.contains("parameter_count") ? act["parameter_count"].get<int>() : 8;
                for (int k = 0; k < count; ++k) values.push_back(2.0 * M_PI * k / count);
            }
            for (double v : values) {
                std::vector<Expression> subst = coordinates(def.chart);
                subst.push_back(Expression(v));
                std::vector<Expression> comps;
                for (const auto& f : family) comps.push_back(simplify(compose(f, subst, def.chart)));
                section.action_maps.emplace_back(def.chart, def.chart, std::move(comps));
            }
        }
        if (section.action_maps.empty()) fail("quotient action defines no maps");
        def.quotient = std::move(section);
    }

    return def;
}

ProblemDefinition load_problem(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open definition file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_problem(buf.str());
}

// ---------------------------------------------------------------------------
// Reduced-problem emission

std::string render_reduced_problem(const QuotientSpec& Q, const PoissonStructure& reduced,
                                   const std::optional<Expression>& reduced_hamiltonian,
                                   const std::vector<Eigen::VectorXd>& ambient_samples) {
    ordered_json j;
    j["schema"] = 1;
    j["chart"] = Q.reduced_chart()->names();

    ordered_json tensor = ordered_json::array();
    const int m = reduced.dimension();
    for (int a = 0; a < m; ++a)
        for (int b = a + 1; b < m; ++b) {
            if (reduced.entry(a, b).is_constant(0.0)) continue;
            tensor.push_back({Q.reduced_chart()->name(a), Q.reduced_chart()->name(b),
                              to_string(reduced.entry(a, b))});
        }
    j["poisson_tensor"] = tensor;
    if (reduced_hamiltonian) j["hamiltonian"] = to_string(*reduced_hamiltonian);

    if (!Q.relations().empty()) {
        ordered_json cas = ordered_json::object();
        for (std::size_t i = 0; i < Q.relations().size(); ++i)
            cas["relation_" + std::to_string(i + 1)] = to_string(Q.relations()[i]);
        j["casimirs"] = cas;
    }

    // image samples: structure validation points, seeds, and a bounding box
    ordered_json pts = ordered_json::array();
    Eigen::VectorXd lo, hi;
    std::vector<Eigen::VectorXd> images;
    for (const auto& z : ambient_samples) images.push_back(Q.image_point(z));
    for (const auto& y : images) {
        ordered_json p = ordered_json::array();
        for (Eigen::Index i = 0; i < y.size(); ++i) p.push_back(y[i]);
        pts.push_back(p);
        if (lo.size() == 0) {
            lo = y;
            hi = y;
        } else {
            lo = lo.cwiseMin(y);
            hi = hi.cwiseMax(y);
        }
    }
    j["validation_points"] = pts;
    if (!images.empty()) {
        ordered_json seeds = ordered_json::array();
        for (std::size_t i = 0; i < std::min<std::size_t>(3, images.size()); ++i) {
            ordered_json p = ordered_json::array();
            for (Eigen::Index k = 0; k < images[i].size(); ++k) p.push_back(images[i][k]);
            seeds.push_back(p);
        }
        j["seeds"] = seeds;
        ordered_json box = ordered_json::array();
        for (Eigen::Index i = 0; i < lo.size(); ++i) {
            double pad = 0.1 * std::max(1.0, hi[i] - lo[i]);
            box.push_back({lo[i] - pad, hi[i] + pad});
        }
        j["sample_box"] = box;
    }
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Digest, formatting, reports

std::string content_digest(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string format_point(const Eigen::VectorXd& z, const ChartPtr& chart) {
    std::string out = "(";
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        if (i) out += ", ";
        if (chart && i < chart->dimension()) out += chart->name(static_cast<int>(i)) + "=";
        out += format_full(z[i]);
    }
    return out + ")";
}

bool RunReport::overall() const {
    for (const auto& c : checks)
        if (!c.passed) return false;
    return true;
}

std::string RunReport::render_text() const {
    std::string out = "preduce " + command + " " + input_name + "\n";
    out += "digest: fnv1a:" + digest + "\n";
    out += "seed: " + std::to_string(seed) + "\n";
    for (const auto& c : checks) {
        out += c.passed ? "[PASS] " : "[FAIL] ";
        out += c.name;
        if (c.worst) out += "  worst " + format_full(*c.worst);
        if (c.witness && c.witness->size() > 0) out += " at " + format_point(*c.witness, nullptr);
        if (!c.detail.empty()) out += "  (" + c.detail + ")";
        out += "\n";
    }
    out += std::string("overall: ") + (overall() ? "PASS" : "FAIL") + "\n";
    return out;
}

std::string RunReport::render_json() const {
    ordered_json j;
    j["schema"] = 1;
    j["command"] = command;
    j["input"] = input_name;
    j["digest"] = "fnv1a:" + digest;
    j["seed"] = seed;
    ordered_json arr = ordered_json::array();
    for (const auto& c : checks) {
        ordered_json cj;
        cj["name"] = c.name;
        cj["passed"] = c.passed;
        if (c.worst) cj["worst"] = format_full(*c.worst);
        if (c.witness) {
            ordered_json w = ordered_json::array();
            for (Eigen::Index i = 0; i < c.witness->size(); ++i) w.push_back(format_full((*c.witness)[i]));
            cj["witness"] = w;
        }
        if (!c.detail.empty()) cj["detail"] = c.detail;
        arr.push_back(cj);
    }
    j["checks"] = arr;
    j["overall"] = overall();
    return j.dump(2) + "\n";
}

std::string trajectory_csv(const Trajectory& traj, const ChartPtr& chart,
                           const std::vector<std::string>& extra_channels) {
    std::string out = "t";
    for (const auto& name : chart->names()) out += "," + name;
    for (const auto& name : extra_channels) out += "," + name;
    out += "\n";
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        out += format_full(traj.times[i]);
        for (Eigen::Index k = 0; k < traj.states[i].size(); ++k) out += "," + format_full(traj.states[i][k]);
        for (const auto& name : extra_channels) {
            const auto* ch = traj.channel(name);
            out += ",";
            out += ch && i < ch->size() ? format_full((*ch)[i]) : "nan";
        }
        out += "\n";
    }
    return out;
}

} // namespace preduce
