// preduce: computational Poisson geometry on coordinate charts.
//
// Subcommands: check | classify | dirac | reduce | flow. Reports go to
// stdout (text, or JSON with --json) and are byte-deterministic for a
// fixed input file and --seed; timing goes to stderr only.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "preduce/dirac.hpp"
#include "preduce/flows.hpp"
#include "preduce/problem.hpp"
#include "preduce/quotient.hpp"

using namespace preduce;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitInput = 2;

struct CommonArgs {
    std::string file;
    std::uint64_t seed = 42;
    bool json = false;
    std::string out;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw StructureError("cannot write file '" + path + "'");
    out << bytes;
}

RunReport make_report(const std::string& command, const CommonArgs& args, const std::string& bytes) {
    RunReport rep;
    rep.command = command;
    rep.input_name = std::filesystem::path(args.file).filename().string();
    rep.digest = content_digest(bytes);
    rep.seed = args.seed;
    return rep;
}

int finish(const RunReport& rep, const CommonArgs& args) {
    std::cout << (args.json ? rep.render_json() : rep.render_text());
    return rep.overall() ? kExitOk : kExitValidation;
}

std::vector<Eigen::VectorXd> check_points(const ProblemDefinition& def, std::uint64_t seed, int count = 50) {
    if (def.validation_points) return *def.validation_points;
    Rng rng(seed);
    return sample_box(def.sample_box, count, rng);
}

double check_tol(const ProblemDefinition& def, double fallback = 1e-10) {
    return def.tolerances.check.value_or(fallback);
}

// split "f,g" at the single top-level comma
std::pair<std::string, std::string> split_pair(const std::string& text) {
    int depth = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '(') ++depth;
        if (text[i] == ')') --depth;
        if (text[i] == ',' && depth == 0) return {text.substr(0, i), text.substr(i + 1)};
    }
    throw InputError("--pairs expects \"f,g\" with a top-level comma: '" + text + "'");
}

Eigen::VectorXd parse_point(const std::string& text, int n) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) vals.push_back(std::stod(item));
    if (static_cast<int>(vals.size()) != n)
        throw InputError("--z0 needs " + std::to_string(n) + " comma-separated numbers");
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z[i] = vals[static_cast<std::size_t>(i)];
    return z;
}

// ---------------------------------------------------------------------------

int cmd_check(const CommonArgs& args) {
    std::string bytes = slurp(args.file);
    ProblemDefinition def = parse_problem(bytes);
    RunReport rep = make_report("check", args, bytes);
    const int n = def.chart->dimension();
    auto points = check_points(def, args.seed);

    // antisymmetry: expression identity plus numeric spot check
    {
        CheckLine line;
        line.name = "antisymmetry";
        line.passed = true;
        double worst = 0.0;
        for (int i = 0; i < n && line.passed; ++i)
            for (int j = i; j < n; ++j) {
                Expression sum = simplify(def.tensor_entries[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] +
                                          def.tensor_entries[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]);
                if (!sum.is_constant(0.0)) {
                    line.passed = false;
                    line.detail = "B[" + def.chart->name(i) + "][" + def.chart->name(j) +
                                  "] + transpose does not simplify to 0";
                    break;
                }
            }
        if (line.passed) {
            for (const auto& z : points)
                for (int i = 0; i < n; ++i)
                    for (int j = i + 1; j < n; ++j)
                        worst = std::max(worst,
                                         std::abs(evaluate(def.tensor_entries[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], z) +
                                                  evaluate(def.tensor_entries[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)], z)));
            line.worst = worst;
            line.passed = worst <= def.tolerances.antisymmetry.value_or(1e-14);
        }
        rep.add(line);
    }

    // Jacobi identity at the validation points
    {
        CheckLine line;
        line.name = "jacobi";
        double worst = 0.0;
        Eigen::VectorXd witness;
        for (const auto& z : points) {
            double r = jacobi_residual_of_entries(def.chart, def.tensor_entries, z);
            if (r >= worst) {
                worst = r;
                witness = z;
            }
        }
        line.worst = worst;
        line.witness = witness;
        line.passed = worst <= def.tolerances.jacobi.value_or(1e-9);
        rep.add(line);
    }

    // declared Casimirs (needs a valid structure)
    if (rep.overall()) {
        PoissonPtr P = def.build_structure(args.seed);
        for (const auto& [name, c] : def.casimirs) {
            auto cas = is_casimir(*P, c, points, check_tol(def));
            CheckLine line;
            line.name = "casimir " + name;
            line.passed = cas.passed;
            line.worst = cas.worst;
            line.witness = cas.witness;
            rep.add(line);
        }
    }
    return finish(rep, args);
}

// ---------------------------------------------------------------------------

int cmd_classify(const CommonArgs& args, const std::string& constraints_name, int sample_count) {
    std::string bytes = slurp(args.file);
    ProblemDefinition def = parse_problem(bytes);
    RunReport rep = make_report("classify", args, bytes);

    PoissonPtr P = def.build_structure(args.seed);
    auto C = def.build_constraint_set(constraints_name, P);

    NewtonOptions newton;
    newton.seed = args.seed;
    if (def.tolerances.rank) newton.rank_rel_tol = *def.tolerances.rank;
    std::vector<SurfaceSample> samples;
    try {
        samples = sample_surface(*C, sample_count, newton);
    } catch (const NumericalError& err) {
        CheckLine line;
        line.name = "surface sampling";
        line.passed = false;
        line.detail = err.what();
        rep.add(line);
        return finish(rep, args);
    }
    {
        CheckLine line;
        line.name = "surface sampling";
        line.passed = true;
        line.detail = std::to_string(samples.size()) + " on-surface samples, residual <= 1e-12";
        rep.add(line);
    }

    ClassifyOptions copts;
    copts.seed = args.seed;
    if (def.tolerances.rank) copts.rank_rel_tol = *def.tolerances.rank;
    ClassificationReport cls = classify(*C, samples, copts);
    {
        CheckLine line;
        line.name = "classification";
        line.passed = true;
        line.detail = to_string(cls.label);
        if (cls.label == SubmanifoldClass::Cosymplectic)
            line.detail += ", worst condition number " + format_full(cls.worst_condition);
        if (cls.symbolically_proven) line.detail += ", involution proven symbolically";
        if (!cls.note.empty()) line.detail += "; " + cls.note;
        rep.add(line);
    }

    if (cls.label == SubmanifoldClass::Cosymplectic) {
        auto dec = cosymplectic_decomposition_checks(*C, samples);
        CheckLine line;
        line.name = "decomposition (kernel, Whitney sum, transversality, leaf split)";
        line.passed = dec.passed;
        line.worst = dec.kernel_margin;
        line.detail = dec.detail;
        rep.add(line);
    }
    if (cls.label == SubmanifoldClass::Coisotropic) {
        auto eq = coisotropic_equivalences_test(*C, samples, 1e-9, args.seed);
        CheckLine line;
        line.name = "coisotropic equivalences (vanishing-field tangency, involution on S)";
        line.passed = eq.passed && !eq.refused;
        line.worst = eq.worst;
        line.detail = eq.detail;
        rep.add(line);
    }
    return finish(rep, args);
}

// ---------------------------------------------------------------------------

int cmd_dirac(const CommonArgs& args, const std::string& constraints_name,
              const std::vector<std::string>& pair_args, int sample_count) {
    std::string bytes = slurp(args.file);
    ProblemDefinition def = parse_problem(bytes);
    RunReport rep = make_report("dirac", args, bytes);

    PoissonPtr P = def.build_structure(args.seed);
    auto C = def.build_constraint_set(constraints_name, P);
    NewtonOptions newton;
    newton.seed = args.seed;
    auto samples = sample_surface(*C, sample_count, newton);

    DiracPtr D;
    try {
        DiracOptions dopts;
        dopts.classify.seed = args.seed;
        D = std::make_shared<DiracContext>(C, samples, dopts);
    } catch (const StructureError& err) {
        CheckLine line;
        line.name = "cosymplectic precondition";
        line.passed = false;
        line.detail = err.what();
        rep.add(line);
        return finish(rep, args);
    }

    const double tol = check_tol(def);
    Rng rng(args.seed);

    for (const auto& pair_text : pair_args) {
        auto [ftext, gtext] = split_pair(pair_text);
        Expression F = parse(ftext, def.chart);
        Expression G = parse(gtext, def.chart);
        CheckLine line;
        line.name = "pair {" + ftext + ", " + gtext + "}";
        line.passed = true;
        Eigen::VectorXd vals = dirac_bracket_values(*D, F, G, samples);
        std::string values;
        for (int i = 0; i < std::min<int>(5, static_cast<int>(vals.size())); ++i) {
            if (i) values += ", ";
            values += format_full(vals[i]);
        }
        line.detail = "values at first samples: " + values;
        if (D->symbolic_inverse()) line.detail += "; expr = " + to_string(dirac_bracket_expr(*D, F, G));
        rep.add(line);
    }

    if (pair_args.empty()) {
        // default behavior: tangential tensor dump at 5 samples
        nlohmann::ordered_json dump;
        dump["schema"] = 1;
        dump["constraints"] = constraints_name;
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < std::min<std::size_t>(5, samples.size()); ++i) {
            ProjectedTensor t = reduced_tensor(*D, samples[i]);
            nlohmann::ordered_json entry;
            nlohmann::ordered_json pt = nlohmann::ordered_json::array();
            for (Eigen::Index k = 0; k < samples[i].z.size(); ++k) pt.push_back(format_full(samples[i].z[k]));
            entry["point"] = pt;
            nlohmann::ordered_json mat = nlohmann::ordered_json::array();
            for (Eigen::Index r = 0; r < t.tangential.rows(); ++r) {
                nlohmann::ordered_json row = nlohmann::ordered_json::array();
                for (Eigen::Index c2 = 0; c2 < t.tangential.cols(); ++c2) row.push_back(format_full(t.tangential(r, c2)));
                mat.push_back(row);
            }
            entry["tangential_tensor"] = mat;
            entry["leaf_dimension"] = reduced_leaf_dimension(*D, samples[i]);
            arr.push_back(entry);
        }
        dump["samples"] = arr;
        std::string text = dump.dump(2) + "\n";
        CheckLine line;
        line.name = "tangential tensor dump";
        line.passed = true;
        if (!args.out.empty()) {
            write_file(args.out, text);
            line.detail = "written to " + std::filesystem::path(args.out).filename().string();
        } else {
            line.detail = dump.dump();
        }
        rep.add(line);
    }

    // property suite
    {
        CheckLine line;
        line.name = "extension independence";
        double worst = 0.0;
        for (int t = 0; t < 3; ++t) {
            Expression F = random_polynomial(def.chart, 2, rng);
            Expression G = random_polynomial(def.chart, 2, rng);
            Expression Fp = F;
            for (int a = 0; a < C->size(); ++a)
                Fp = Fp + random_polynomial(def.chart, 2, rng) * C->constraint(a);
            worst = std::max(worst, (dirac_bracket_values(*D, F, G, samples) -
                                     dirac_bracket_values(*D, simplify(Fp), G, samples))
                                        .cwiseAbs()
                                        .maxCoeff());
        }
        line.worst = worst;
        line.passed = worst <= tol;
        rep.add(line);
    }
    {
        CheckLine line;
        line.name = "constraints are Casimirs";
        double worst = 0.0;
        for (int a = 0; a < C->size(); ++a) {
            Expression G = random_polynomial(def.chart, 2, rng);
            worst = std::max(worst, dirac_bracket_values(*D, C->constraint(a), G, samples).cwiseAbs().maxCoeff());
        }
        line.worst = worst;
        line.passed = worst <= tol;
        rep.add(line);
    }
    {
        CheckLine line;
        line.name = "Dirac field tangency";
        double worst = 0.0;
        for (int t = 0; t < 3; ++t) {
            Expression F = random_polynomial(def.chart, 2, rng);
            for (const auto& s : samples) {
                Eigen::VectorXd v = dirac_vector_field(*D, F, s);
                worst = std::max(worst, (s.conormal.transpose() * v).cwiseAbs().maxCoeff());
            }
        }
        line.worst = worst;
        line.passed = worst <= tol;
        rep.add(line);
    }
    {
        CheckLine line;
        line.name = "projected tensor matches the bracket";
        double worst = 0.0;
        for (int t = 0; t < 3; ++t) {
            Expression F = random_polynomial(def.chart, 2, rng);
            Expression G = random_polynomial(def.chart, 2, rng);
            Eigen::VectorXd vals = dirac_bracket_values(*D, F, G, samples);
            for (std::size_t i = 0; i < samples.size(); ++i) {
                ProjectedTensor rt = reduced_tensor(*D, samples[i]);
                auto dF = gradient(F, def.chart);
                auto dG = gradient(G, def.chart);
                Eigen::VectorXd vF(def.chart->dimension()), vG(def.chart->dimension());
                for (int k = 0; k < def.chart->dimension(); ++k) {
                    vF[k] = evaluate(dF[static_cast<std::size_t>(k)], samples[i].z);
                    vG[k] = evaluate(dG[static_cast<std::size_t>(k)], samples[i].z);
                }
                worst = std::max(worst, std::abs(vF.dot(rt.ambient * vG) - vals[static_cast<Eigen::Index>(i)]));
            }
        }
        line.worst = worst;
        line.passed = worst <= tol;
        rep.add(line);
    }
    {
        CheckLine line;
        line.name = "leaf orthogonality";
        bool ok = true;
        double worst = 0.0;
        for (const auto& s : samples) {
            auto lo = leaf_orthogonality_check(*D, s, tol);
            ok = ok && lo.passed;
            worst = std::max(worst, lo.pairing_worst);
        }
        line.worst = worst;
        line.passed = ok;
        rep.add(line);
    }
    return finish(rep, args);
}

// ---------------------------------------------------------------------------

int cmd_reduce(const CommonArgs& args, bool discover) {
    std::string bytes = slurp(args.file);
    ProblemDefinition def = parse_problem(bytes);
    if (!def.quotient) throw InputError("the definition file has no quotient section");
    RunReport rep = make_report("reduce", args, bytes);

    PoissonPtr P = def.build_structure(args.seed);
    Rng rng(args.seed);
    auto samples = sample_box(def.sample_box, 100, rng);
    const double tol = check_tol(def);

    QuotientSection section = *def.quotient;
    if (discover) {
        auto found = discover_closure(*P, section.generators, section.reduced_chart, samples);
        CheckLine line;
        line.name = "closure discovery";
        line.passed = found.has_value();
        if (found) {
            line.worst = found->fit_residual;
            line.detail = "least-squares fit accepted (degree <= 3)";
            section.closure = found->closure;
        } else {
            line.detail = "no polynomial closure of degree <= 3 fits the sampled brackets";
        }
        rep.add(line);
        if (!found) return finish(rep, args);
    }

    QuotientSpec Q(P, section.action_maps, section.generators, section.reduced_chart, section.closure,
                   section.relations);

    auto inv = verify_invariance(Q, samples, tol);
    rep.add(CheckLine{"invariance", inv.passed, inv.worst, inv.witness, inv.detail});

    auto clo = verify_closure(Q, samples, tol);
    CheckLine cline{"closure", clo.passed, clo.worst, clo.witness, clo.detail};
    cline.detail += "; reduced Jacobi worst " + format_full(clo.reduced_jacobi_worst);
    rep.add(cline);

    if (!inv.passed || !clo.passed) return finish(rep, args);

    auto reduced = std::make_shared<PoissonStructure>(build_reduced(Q, samples, tol));

    auto master = check_reduction_identity(Q, *reduced, samples, 10, tol, args.seed);
    rep.add(CheckLine{"reduced bracket characterization", master.passed, master.worst, master.witness,
                      master.detail});

    for (std::size_t i = 0; i < Q.relations().size(); ++i) {
        auto cas = check_casimir_descent(Q, Q.relations()[i], samples, 6, tol, args.seed);
        rep.add(CheckLine{"relation " + std::to_string(i + 1) + " descends to a Casimir", cas.passed,
                          cas.worst, cas.witness, ""});
    }

    std::optional<Expression> h_red = section.reduced_hamiltonian;
    if (def.hamiltonian && h_red) {
        Expression diff = simplify(Q.pull_back(*h_red) - *def.hamiltonian);
        double worst = 0.0;
        for (const auto& z : samples) worst = std::max(worst, std::abs(evaluate(diff, z)));
        rep.add(CheckLine{"reduced Hamiltonian descent", worst <= tol, worst, std::nullopt, ""});
    }

    std::string out_path = args.out.empty()
                               ? std::filesystem::path(args.file).stem().string() + ".reduced.json"
                               : args.out;
    if (rep.overall()) {
        write_file(out_path, render_reduced_problem(Q, *reduced, h_red, samples));
        rep.add(CheckLine{"reduced definition written", true, std::nullopt, std::nullopt,
                          std::filesystem::path(out_path).filename().string()});
    }
    return finish(rep, args);
}

// ---------------------------------------------------------------------------

int cmd_flow(const CommonArgs& args, const std::string& hamiltonian_text, const std::string& z0_text,
             double dt, double T, const std::string& constraints_name, const std::string& method) {
    std::string bytes = slurp(args.file);
    ProblemDefinition def = parse_problem(bytes);
    RunReport rep = make_report("flow", args, bytes);

    PoissonPtr P = def.build_structure(args.seed);

    Expression h(0.0);
    if (!hamiltonian_text.empty())
        h = parse(hamiltonian_text, def.chart);
    else if (def.hamiltonian)
        h = *def.hamiltonian;
    else
        throw InputError("no Hamiltonian: give --hamiltonian or set \"hamiltonian\" in the file");

    Eigen::VectorXd z0;
    if (!z0_text.empty())
        z0 = parse_point(z0_text, def.chart->dimension());
    else if (!def.seeds.empty())
        z0 = def.seeds.front();
    else
        throw InputError("no initial point: give --z0 or set \"seeds\" in the file");

    IntegratorConfig cfg;
    cfg.dt = dt;
    cfg.T = T;
    cfg.method = method == "rk4" ? IntegratorConfig::Method::Rk4 : IntegratorConfig::Method::ProjectedRk4;

    Trajectory traj;
    std::vector<std::string> extra_channels;
    for (const auto& [name, e] : def.tracked) extra_channels.push_back(name);

    if (!constraints_name.empty()) {
        auto C = def.build_constraint_set(constraints_name, P);
        NewtonOptions newton;
        newton.seed = args.seed;
        auto validation = sample_surface(*C, 10, newton);
        DiracOptions dopts;
        dopts.classify.seed = args.seed;
        auto D = std::make_shared<DiracContext>(C, validation, dopts);
        if (C->residual(z0).cwiseAbs().maxCoeff() > 1e-10)
            throw StructureError("initial point is not on the constraint surface (|F| = " +
                                 format_full(C->residual(z0).cwiseAbs().maxCoeff()) + ")");
        SurfaceSample s0 = make_surface_sample(*C, z0);
        traj = integrate_constrained(D, h, s0, cfg, def.tracked);
        extra_channels.insert(extra_channels.begin(), "constraint_residual");
    } else {
        traj = integrate(*P, h, z0, cfg, def.tracked);
    }

    CheckLine iline;
    iline.name = "integration";
    iline.passed = !traj.truncated;
    iline.detail = traj.truncated
                       ? "truncated at t = " + format_full(traj.last_valid_time()) + ": " + traj.error
                       : std::to_string(traj.times.size()) + " rows, final t = " +
                             format_full(traj.times.empty() ? 0.0 : traj.times.back());
    rep.add(iline);

    auto cons = conservation_report(*P, traj, def.tracked);
    for (const auto& e : cons.entries) {
        CheckLine line;
        line.name = "conservation " + e.name;
        line.passed = true; // informational: drift plus a-priori classification
        line.worst = e.drift;
        line.detail = e.classification + ", |{f,h}|(z0) = " + format_full(e.bracket_residual);
        rep.add(line);
    }

    std::string csv = trajectory_csv(traj, def.chart, extra_channels);
    if (!args.out.empty()) {
        write_file(args.out, csv);
        std::cout << (args.json ? rep.render_json() : rep.render_text());
    } else {
        // CSV on stdout; the report goes to stderr to keep the stream clean
        std::cout << csv;
        std::cerr << (args.json ? rep.render_json() : rep.render_text());
    }
    return rep.overall() ? kExitOk : kExitValidation;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"computational Poisson geometry: brackets, constraints, Dirac reduction, quotients, flows"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string constraints_name;
    std::vector<std::string> pairs;
    std::string hamiltonian_text, z0_text, method = "projected-rk4";
    double dt = 1e-3, T = 10.0;
    int sample_count = 20;
    bool discover = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("file", args.file, "problem definition JSON")->required();
        cmd->add_option("--seed", args.seed, "random seed for all sampled checks");
        cmd->add_flag("--json", args.json, "machine-readable report");
        cmd->add_option("--out", args.out, "output path");
    };

    CLI::App* check = app.add_subcommand("check", "validate the Poisson structure and declared Casimirs");
    add_common(check);

    CLI::App* classify_cmd = app.add_subcommand("classify", "classify a constraint submanifold");
    add_common(classify_cmd);
    classify_cmd->add_option("--constraints", constraints_name, "constraint set name")->required();
    classify_cmd->add_option("--samples", sample_count, "on-surface sample count");

    CLI::App* dirac_cmd = app.add_subcommand("dirac", "Dirac brackets on a second-class constraint set");
    add_common(dirac_cmd);
    dirac_cmd->add_option("--constraints", constraints_name, "constraint set name")->required();
    dirac_cmd->add_option("--pairs", pairs, "function pair \"f,g\" (repeatable)");
    dirac_cmd->add_option("--samples", sample_count, "on-surface sample count");

    CLI::App* reduce_cmd = app.add_subcommand("reduce", "verify and emit the quotient reduction");
    add_common(reduce_cmd);
    reduce_cmd->add_flag("--discover", discover, "fit the closure relations instead of reading them");

    CLI::App* flow_cmd = app.add_subcommand("flow", "integrate Hamiltonian dynamics, CSV output");
    add_common(flow_cmd);
    flow_cmd->add_option("--hamiltonian", hamiltonian_text, "Hamiltonian expression (default: from file)");
    flow_cmd->add_option("--z0", z0_text, "initial point, comma separated (default: first seed)");
    flow_cmd->add_option("--dt", dt, "time step");
    flow_cmd->add_option("--T", T, "final time");
    flow_cmd->add_option("--constraints", constraints_name, "flow on this constraint surface (Dirac field)");
    flow_cmd->add_option("--method", method, "rk4 | projected-rk4 (constrained flows)");

    CLI11_PARSE(app, argc, argv);

    auto started = std::chrono::steady_clock::now();
    int code = kExitOk;
    try {
        if (check->parsed()) code = cmd_check(args);
        else if (classify_cmd->parsed()) code = cmd_classify(args, constraints_name, sample_count);
        else if (dirac_cmd->parsed()) code = cmd_dirac(args, constraints_name, pairs, sample_count);
        else if (reduce_cmd->parsed()) code = cmd_reduce(args, discover);
        else if (flow_cmd->parsed()) code = cmd_flow(args, hamiltonian_text, z0_text, dt, T, constraints_name, method);
    } catch (const InputError& err) {
        std::cerr << "input error: " << err.what() << "\n";
        code = kExitInput;
    } catch (const ParseError& err) {
        std::cerr << "input error: " << err.what() << "\n";
        code = kExitInput;
    } catch (const ChartMismatchError& err) {
        std::cerr << "input error: " << err.what() << "\n";
        code = kExitInput;
    } catch (const StructureError& err) {
        std::cerr << "error: " << err.what() << "\n";
        code = kExitValidation;
    } catch (const NumericalError& err) {
        std::cerr << "error: " << err.what() << "\n";
        code = kExitValidation;
    } catch (const std::exception& err) {
        std::cerr << "input error: " << err.what() << "\n";
        code = kExitInput;
    }
    auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started);
    std::fprintf(stderr, "timing: %.1f ms\n", elapsed.count());
    return code;
}
