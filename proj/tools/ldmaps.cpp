#include "ldmaps/dataset_io.hpp"
#include "ldmaps/error.hpp"
#include "ldmaps/evaluation.hpp"
#include "ldmaps/model_io.hpp"
#include "ldmaps/parallel.hpp"
#include "ldmaps/perturbation.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace ldmaps;

namespace {

enum ExitCode { ok = 0, failure = 1, usage = 2, invalid = 3, bad_input = 4, io = 5, numerical = 6 };

std::string fmt(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// Writes to a sibling temporary and renames on commit, so the target only
// appears once it is complete.
class OutputFile {
public:
    explicit OutputFile(fs::path path) : path_(std::move(path)) {
        if (path_ == "-") return;
        tmp_ = path_;
        tmp_ += ".tmp";
        file_.open(tmp_, std::ios::binary);
        if (!file_) throw IoError("cannot open '" + path_.string() + "' for writing");
    }
    ~OutputFile() {
        if (!committed_ && !tmp_.empty()) {
            file_.close();
            std::error_code ec;
            fs::remove(tmp_, ec);
        }
    }
    std::ostream& stream() { return path_ == "-" ? std::cout : file_; }
    void commit() {
        stream().flush();
        if (!stream()) throw IoError("failed writing '" + path_.string() + "'");
        if (!tmp_.empty()) {
            file_.close();
            fs::rename(tmp_, path_);
        }
        committed_ = true;
    }

private:
    fs::path path_;
    fs::path tmp_;
    std::ofstream file_;
    bool committed_ = false;
};

struct InputArgs {
    std::string path;
    std::string metric = "euclidean";
    bool header = false;
    int atoms = 0;
    std::string format = "csv";

    void add(CLI::App* cmd, bool required = true) {
        auto* opt = cmd->add_option("--input", path, "Points file (CSV rows, or xyz frames)");
        if (required) opt->required();
        cmd->add_option("--metric", metric, "euclidean | rmsd")->check(CLI::IsMember({"euclidean", "rmsd", "aligned_rmsd"}));
        cmd->add_flag("--header", header, "Skip the first CSV line");
        cmd->add_option("--atoms", atoms, "Atoms per frame (rmsd)")->check(CLI::PositiveNumber);
        cmd->add_option("--format", format, "csv | xyz")->check(CLI::IsMember({"csv", "xyz"}));
    }
    LoadOptions options() const {
        LoadOptions o;
        o.format = format == "xyz" ? PointFormat::xyz_frames : PointFormat::csv;
        o.metric = parse_metric(metric);
        o.header = header;
        if (atoms > 0) o.atoms_per_frame = atoms;
        return o;
    }
    PointSet load() const { return load_points(path, options()); }
};

struct KernelArgs {
    std::string epsilon = "auto";
    double multiplier = 1.0;

    void add(CLI::App* cmd) {
        cmd->add_option("--epsilon", epsilon, "Kernel bandwidth, or 'auto' for the smallest connected value");
        cmd->add_option("--threshold-multiplier", multiplier, "Neighbourhood threshold in units of sqrt(epsilon)")
            ->check(CLI::PositiveNumber);
    }
    KernelConfig config() const {
        KernelConfig cfg;
        cfg.threshold_multiplier = multiplier;
        if (epsilon == "auto") {
            cfg.mode = KernelConfig::Mode::auto_min_connected;
            return cfg;
        }
        double v = 0.0;
        const auto* end = epsilon.data() + epsilon.size();
        auto res = std::from_chars(epsilon.data(), end, v);
        if (res.ec != std::errc() || res.ptr != end)
            throw ValidationError("--epsilon must be a number or 'auto', got '" + epsilon + "'");
        if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("--epsilon must be positive, got " + epsilon);
        cfg.epsilon = v;
        cfg.mode = KernelConfig::Mode::fixed;
        return cfg;
    }
};

KernelConfig resolved(const DistanceMatrix& d, KernelConfig cfg) {
    cfg.epsilon = resolve_epsilon(d, cfg);
    cfg.mode = KernelConfig::Mode::fixed;
    std::cerr << "epsilon=" << fmt(cfg.epsilon) << '\n';
    return cfg;
}

std::vector<Eigen::Index> parse_grid(const std::string& text) {
    std::vector<Eigen::Index> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        long long v = 0;
        auto res = std::from_chars(item.data(), item.data() + item.size(), v);
        if (res.ec != std::errc() || res.ptr != item.data() + item.size() || v <= 0)
            throw ValidationError("bad landmark count '" + item + "' in grid");
        out.push_back(static_cast<Eigen::Index>(v));
    }
    if (out.empty()) throw ValidationError("empty landmark grid");
    return out;
}

LandmarkSet choose_landmarks(const DistanceMatrix& d, const std::string& method, Eigen::Index m, std::uint64_t seed,
                             double epsilon, double multiplier) {
    switch (parse_landmark_method(method)) {
        case LandmarkMethod::pst: return select_pst(d, epsilon, seed, multiplier);
        case LandmarkMethod::kmedoids:
            if (m <= 0) throw ValidationError("--m is required with --landmarks kmedoids");
            return select_kmedoids(d, m, seed);
        case LandmarkMethod::all: return all_points(d.size());
    }
    throw ValidationError("unknown landmark method");
}

void write_embedding_header(std::ostream& os, int k) {
    for (int l = 2; l <= k + 1; ++l) os << (l > 2 ? "," : "") << "psi" << l;
    os << '\n';
}

void write_embedding(std::ostream& os, const EmbeddingMatrix& e) {
    write_embedding_header(os, static_cast<int>(e.cols()));
    std::vector<double> row(static_cast<std::size_t>(e.cols()));
    for (Eigen::Index i = 0; i < e.rows(); ++i) {
        for (Eigen::Index c = 0; c < e.cols(); ++c) row[static_cast<std::size_t>(c)] = e(i, c);
        write_csv_row(os, row);
    }
}

struct ModelInfo {
    Metric metric;
    std::optional<int> atoms;
    Eigen::Index dim;
    int k;
};

ModelInfo info(const Model& model) {
    return std::visit(
        [](const auto& m) -> ModelInfo {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, DiffusionModel>)
                return {m.metric, m.atoms_per_frame, m.training_points.cols(), m.k};
            else
                return {m.metric, m.atoms_per_frame, m.landmark_points.cols(), m.k};
        },
        model);
}

void embed_point(const Model& model, std::span<const double> q, std::span<double> out) {
    if (const auto* full = std::get_if<DiffusionModel>(&model))
        nystrom_extend_point(*full, q, out);
    else
        landmark_nystrom_point(std::get<LandmarkModel>(model), q, out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Landmark diffusion maps: manifold learning and fast out-of-sample embedding"};
    app.require_subcommand(1);
    unsigned threads = 0;
    app.add_option("--threads", threads, "Worker threads (default: LDMAPS_THREADS or all cores)")
        ->check(CLI::PositiveNumber);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a synthetic data set");
    gen->require_subcommand(1);
    SwissRollSpec roll_spec;
    std::string roll_out, arclength_out;
    auto* roll = gen->add_subcommand("swiss-roll", "Swiss roll in 3-D");
    roll->add_option("--n", roll_spec.n, "Number of points")->check(CLI::Range(4, 100000000));
    roll->add_option("--seed", roll_spec.seed, "Random seed");
    roll->add_option("--noise", roll_spec.noise, "Gaussian noise per coordinate")->check(CLI::NonNegativeNumber);
    roll->add_option("--out", roll_out, "Output CSV")->required();
    roll->add_option("--with-arclength", arclength_out, "Also write the spiral parameter t, one per line");

    ChainSpec chain_spec;
    std::string chain_out;
    auto* chain = gen->add_subcommand("chain", "Rigidly moved helical chain frames (for the rmsd metric)");
    chain->add_option("--n", chain_spec.n, "Number of frames")->check(CLI::Range(2, 100000000));
    chain->add_option("--atoms", chain_spec.atoms, "Atoms per frame")->check(CLI::Range(3, 100000));
    chain->add_option("--seed", chain_spec.seed, "Random seed");
    chain->add_option("--noise", chain_spec.noise, "Gaussian noise per coordinate")->check(CLI::NonNegativeNumber);
    chain->add_option("--out", chain_out, "Output CSV (one frame per row)")->required();

    // fit
    auto* fit = app.add_subcommand("fit", "Fit a full or landmark diffusion map");
    InputArgs fit_in;
    KernelArgs fit_kernel;
    int fit_k = 2;
    std::string fit_method, fit_out, fit_landmarks_out;
    Eigen::Index fit_m = 0;
    std::uint64_t fit_seed = 0;
    fit_in.add(fit);
    fit_kernel.add(fit);
    fit->add_option("--k", fit_k, "Embedding dimension")->check(CLI::PositiveNumber);
    fit->add_option("--landmarks", fit_method, "pst | kmedoids (omit for a full model)")
        ->check(CLI::IsMember({"pst", "kmedoids"}));
    fit->add_option("--m", fit_m, "Number of k-medoids landmarks")->check(CLI::PositiveNumber);
    fit->add_option("--seed", fit_seed, "Landmark selection seed");
    fit->add_option("--landmarks-out", fit_landmarks_out, "Also write the landmark set as CSV");
    fit->add_option("--out", fit_out, "Model file")->required();

    // embed
    auto* embed = app.add_subcommand("embed", "Embed points through a fitted model");
    std::string embed_model, embed_in, embed_out, embed_metric, embed_format = "csv";
    bool embed_stream = false, embed_header = false;
    embed->add_option("--model", embed_model, "Model file")->required();
    embed->add_option("--input", embed_in, "Points to embed ('-' for stdin)")->required();
    embed->add_option("--out", embed_out, "Embedding CSV ('-' for stdout)")->required();
    embed->add_option("--metric", embed_metric, "Expected metric; must match the model")
        ->check(CLI::IsMember({"euclidean", "rmsd", "aligned_rmsd"}));
    embed->add_option("--format", embed_format, "csv | xyz (batch mode only)")->check(CLI::IsMember({"csv", "xyz"}));
    embed->add_flag("--header", embed_header, "Skip the first CSV line");
    embed->add_flag("--stream", embed_stream, "Embed line by line, flushing every output row");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Cross-validated landmark error table");
    InputArgs eval_in;
    KernelArgs eval_kernel;
    int eval_k = 2, eval_folds = 5, eval_seeds = 1;
    std::vector<int> eval_only;
    std::string eval_method = "kmedoids", eval_grid, eval_out = "-", eval_summary;
    std::uint64_t eval_seed = 0;
    eval_in.add(evaluate);
    eval_kernel.add(evaluate);
    evaluate->add_option("--k", eval_k, "Embedding dimension")->check(CLI::PositiveNumber);
    evaluate->add_option("--method", eval_method, "pst | kmedoids | both")
        ->check(CLI::IsMember({"pst", "kmedoids", "both"}));
    evaluate->add_option("--m-grid", eval_grid, "Comma-separated k-medoids landmark counts");
    evaluate->add_option("--folds", eval_folds, "Number of folds")->check(CLI::Range(2, 1000));
    evaluate->add_option("--only-fold", eval_only, "Evaluate just these folds (0-based)");
    evaluate->add_option("--seed", eval_seed, "Fold and landmark seed");
    evaluate->add_option("--seeds", eval_seeds, "Landmark seeds per configuration")->check(CLI::Range(1, 1000));
    evaluate->add_option("--out", eval_out, "Per-fold CSV ('-' for stdout)");
    evaluate->add_option("--summary", eval_summary, "Mean/std CSV grouped by fold and by seed");

    // bench
    auto* bench = app.add_subcommand("bench", "Out-of-sample speedup of landmark over full Nystrom");
    InputArgs bench_in;
    KernelArgs bench_kernel;
    int bench_k = 2, bench_repeats = 5;
    std::string bench_grid, bench_queries, bench_out = "-";
    std::uint64_t bench_seed = 0;
    bench_in.add(bench);
    bench_kernel.add(bench);
    bench->add_option("--k", bench_k, "Embedding dimension")->check(CLI::PositiveNumber);
    bench->add_option("--m-grid", bench_grid, "Comma-separated k-medoids landmark counts")->required();
    bench->add_option("--repeats", bench_repeats, "Timed repeats (median reported)")->check(CLI::Range(1, 1000));
    bench->add_option("--queries", bench_queries, "Query points (default: a held-out fifth of --input)");
    bench->add_option("--seed", bench_seed, "Split and landmark seed");
    bench->add_option("--out", bench_out, "Benchmark CSV ('-' for stdout)");

    // predict-error
    auto* predict = app.add_subcommand("predict-error", "First-order landmark error prediction");
    InputArgs pred_in;
    KernelArgs pred_kernel;
    int pred_k = 2;
    std::string pred_file, pred_method, pred_out = "-", pred_expt = "collapsed";
    Eigen::Index pred_m = 0;
    std::uint64_t pred_seed = 0;
    bool pred_full = false, pred_exclude = false;
    pred_in.add(predict);
    pred_kernel.add(predict);
    predict->add_option("--k", pred_k, "Embedding dimension")->check(CLI::PositiveNumber);
    auto* lf = predict->add_option("--landmarks-file", pred_file, "Landmark CSV (index,multiplicity)");
    auto* lm = predict->add_option("--landmarks", pred_method, "pst | kmedoids | all")
                   ->check(CLI::IsMember({"pst", "kmedoids", "all"}));
    lf->excludes(lm);
    predict->add_option("--m", pred_m, "Number of k-medoids landmarks")->check(CLI::PositiveNumber);
    predict->add_option("--seed", pred_seed, "Landmark selection seed");
    predict->add_flag("--full-spectrum", pred_full, "Expand over every eigenvector instead of the kept modes");
    predict->add_flag("--exclude-trivial", pred_exclude, "Leave the constant mode out of the expansion");
    predict->add_option("--expt", pred_expt, "Measured error against: collapsed | nystrom")
        ->check(CLI::IsMember({"collapsed", "nystrom"}));
    predict->add_option("--out", pred_out, "Report CSV ('-' for stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return usage;
    }

    try {
        if (threads > 0) set_thread_count(threads);

        if (*roll) {
            const SwissRoll r = generate_swiss_roll(roll_spec);
            std::cerr << "seed=" << roll_spec.seed << '\n';
            OutputFile out(roll_out);
            std::vector<double> row(3);
            for (Eigen::Index i = 0; i < r.points.size(); ++i) {
                for (int c = 0; c < 3; ++c) row[static_cast<std::size_t>(c)] = r.points.points(i, c);
                write_csv_row(out.stream(), row);
            }
            if (!arclength_out.empty()) {
                OutputFile t(arclength_out);
                for (double v : r.t) write_csv_row(t.stream(), std::span<const double>(&v, 1));
                t.commit();
            }
            out.commit();
        } else if (*chain) {
            const PointSet ps = generate_chain_frames(chain_spec);
            std::cerr << "seed=" << chain_spec.seed << '\n';
            OutputFile out(chain_out);
            std::vector<double> row(static_cast<std::size_t>(ps.dim()));
            for (Eigen::Index i = 0; i < ps.size(); ++i) {
                for (Eigen::Index c = 0; c < ps.dim(); ++c) row[static_cast<std::size_t>(c)] = ps.points(i, c);
                write_csv_row(out.stream(), row);
            }
            out.commit();
        } else if (*fit) {
            const PointSet ps = fit_in.load();
            const DistanceMatrix d = pairwise_distances(ps);
            const KernelConfig cfg = resolved(d, fit_kernel.config());
            Model model;
            if (fit_method.empty()) {
                model = fit_diffusion_map(ps, d, cfg, fit_k);
            } else {
                std::cerr << "seed=" << fit_seed << '\n';
                const LandmarkSet ls =
                    choose_landmarks(d, fit_method, fit_m, fit_seed, cfg.epsilon, cfg.threshold_multiplier);
                std::cerr << "landmarks=" << ls.size() << '\n';
                if (!fit_landmarks_out.empty()) save_landmarks(ls, fit_landmarks_out);
                model = fit_landmark_map(ps, ls, cfg.epsilon, fit_k);
            }
            OutputFile out(fit_out);
            write_model(model, out.stream());
            out.commit();
        } else if (*embed) {
            const Model model = load_model(embed_model);
            const ModelInfo mi = info(model);
            if (!embed_metric.empty() && parse_metric(embed_metric) != mi.metric)
                throw ValidationError("input metric " + embed_metric + " does not match the model metric " +
                                      std::string(to_string(mi.metric)));
            OutputFile out(embed_out);
            std::ostream& os = out.stream();
            if (embed_stream) {
                if (embed_format != "csv") throw ValidationError("--stream reads CSV rows only");
                std::ifstream file;
                if (embed_in != "-") {
                    file.open(embed_in);
                    if (!file) throw IoError("cannot open '" + embed_in + "'");
                }
                std::istream& is = embed_in == "-" ? std::cin : file;
                write_embedding_header(os, mi.k);
                os.flush();
                std::vector<double> row(static_cast<std::size_t>(mi.k));
                std::string line;
                std::size_t line_no = 0;
                while (std::getline(is, line)) {
                    ++line_no;
                    if (embed_header && line_no == 1) continue;
                    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
                    const std::vector<double> q = parse_csv_row(line, line_no);
                    if (static_cast<Eigen::Index>(q.size()) != mi.dim)
                        throw ParseError("expected " + std::to_string(mi.dim) + " values, got " +
                                             std::to_string(q.size()),
                                         line_no);
                    embed_point(model, q, row);
                    write_csv_row(os, row);
                    os.flush();
                }
            } else {
                LoadOptions o;
                o.format = embed_format == "xyz" ? PointFormat::xyz_frames : PointFormat::csv;
                o.metric = mi.metric;
                o.header = embed_header;
                o.atoms_per_frame = mi.atoms;
                PointSet q;
                if (embed_in == "-") {
                    std::stringstream buf;
                    buf << std::cin.rdbuf();
                    q = parse_points(buf.str(), o);
                } else {
                    q = load_points(embed_in, o);
                }
                const EmbeddingMatrix e = std::holds_alternative<DiffusionModel>(model)
                                              ? nystrom_extend(std::get<DiffusionModel>(model), q)
                                              : landmark_nystrom(std::get<LandmarkModel>(model), q);
                write_embedding(os, e);
            }
            out.commit();
        } else if (*evaluate) {
            const PointSet ps = eval_in.load();
            CrossValidationConfig cfg;
            cfg.kernel = eval_kernel.config();
            cfg.k = eval_k;
            cfg.n_folds = eval_folds;
            cfg.seed = eval_seed;
            cfg.folds = eval_only;
            std::cerr << "seed=" << eval_seed << '\n';
            for (int s = 0; s < eval_seeds; ++s) {
                const std::uint64_t seed = eval_seed + static_cast<std::uint64_t>(s);
                if (eval_method == "pst" || eval_method == "both") {
                    LandmarkPolicy p;
                    p.method = LandmarkMethod::pst;
                    p.seed = seed;
                    p.multiplier = eval_kernel.multiplier;
                    cfg.policies.push_back(p);
                }
                if (eval_method == "kmedoids" || eval_method == "both") {
                    if (eval_grid.empty()) throw ValidationError("--m-grid is required for k-medoids evaluation");
                    for (auto m : parse_grid(eval_grid)) {
                        LandmarkPolicy p;
                        p.method = LandmarkMethod::kmedoids;
                        p.m = m;
                        p.seed = seed;
                        cfg.policies.push_back(p);
                    }
                }
            }
            const auto rows = cross_validate(ps, cfg);
            OutputFile out(eval_out);
            write_error_table(out.stream(), rows);
            if (!eval_summary.empty()) {
                OutputFile sum(eval_summary);
                write_summary_table(sum.stream(), summarize_errors(rows));
                sum.commit();
            }
            out.commit();
        } else if (*bench) {
            PointSet train = bench_in.load();
            PointSet queries;
            if (!bench_queries.empty()) {
                queries = load_points(bench_queries, bench_in.options());
            } else {
                const FoldPlan plan = make_folds(train.size(), 5, bench_seed);
                queries = subset(train, plan.test[0]);
                train = subset(train, plan.train[0]);
            }
            const DistanceMatrix d = pairwise_distances(train);
            const KernelConfig cfg = resolved(d, bench_kernel.config());
            std::cerr << "seed=" << bench_seed << '\n';
            const DiffusionModel full = fit_diffusion_map(train, d, cfg, bench_k);
            std::vector<BenchmarkResult> rows;
            for (auto m : parse_grid(bench_grid)) {
                const LandmarkSet ls = select_kmedoids(d, m, bench_seed);
                const LandmarkModel lmod = fit_landmark_map(train, ls, cfg.epsilon, bench_k);
                rows.push_back(benchmark_speedup(full, lmod, queries, bench_repeats));
                std::cerr << "M=" << m << " S=" << fmt(rows.back().speedup) << '\n';
            }
            OutputFile out(bench_out);
            write_benchmark_table(out.stream(), rows);
            out.commit();
        } else if (*predict) {
            const PointSet ps = pred_in.load();
            const DistanceMatrix d = pairwise_distances(ps);
            const KernelConfig cfg = resolved(d, pred_kernel.config());
            LandmarkSet ls;
            if (!pred_file.empty()) {
                ls = load_landmarks(pred_file);
                ls = make_landmark_set(d, ls.indices, ls.method, ls.seed);
            } else if (!pred_method.empty()) {
                std::cerr << "seed=" << pred_seed << '\n';
                ls = choose_landmarks(d, pred_method, pred_m, pred_seed, cfg.epsilon, cfg.threshold_multiplier);
            } else {
                throw ValidationError("one of --landmarks-file or --landmarks is required");
            }
            const DiffusionModel full = fit_diffusion_map(ps, d, cfg, pred_k);
            PerturbationOptions po;
            po.full_spectrum = pred_full;
            po.exclude_trivial = pred_exclude;
            PerturbationReport report = predict_landmark_error(full, d, ls, po);
            const LandmarkModel lmod = fit_landmark_map(ps, ls, cfg.epsilon, pred_k);
            const EmbeddingMatrix truth = embed_training(full);
            EmbeddingMatrix approx =
                pred_expt == "collapsed" ? collapsed_embedding(lmod, d, ls) : embed_non_landmarks(lmod, ps, ls);
            apply_column_signs(approx, alignment_signs(truth, approx));
            report.sigma_expt = measure_sigma_expt(truth, approx);
            OutputFile out(pred_out);
            out.stream() << "index,sigma_pred,sigma_expt\n";
            for (Eigen::Index i = 0; i < report.sigma_pred.size(); ++i)
                out.stream() << i << ',' << fmt(report.sigma_pred(i)) << ',' << fmt(report.sigma_expt(i)) << '\n';
            out.commit();
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return invalid;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return bad_input;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return io;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return failure;
    }
    return ok;
}
