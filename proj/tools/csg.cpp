// csg: command-line front end for the CSG program-induction toolkit.
//
// Subcommands: gen, exec, train, infer, eval, detect, plot.
// The CSG_CONFIG environment variable names a default grammar config file.

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "csg/datagen.hpp"
#include "csg/errors.hpp"
#include "csg/eval.hpp"
#include "csg/exec.hpp"
#include "csg/grammar.hpp"
#include "csg/metrics.hpp"
#include "csg/policy.hpp"
#include "csg/raster.hpp"
#include "csg/search.hpp"
#include "csg/svgplot.hpp"
#include "csg/training.hpp"

namespace fs = std::filesystem;
using namespace csg;

namespace {

std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t pos = 0;
            const int v = std::stoi(item, &pos);
            if (pos != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw CLI::ValidationError(what, "not a comma-separated integer list: " + text);
        }
    }
    if (out.empty()) throw CLI::ValidationError(what, "empty list");
    return out;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(item, &pos);
            if (pos != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw CLI::ValidationError(what, "not a comma-separated number list: " + text);
        }
    }
    if (out.empty()) throw CLI::ValidationError(what, "empty list");
    return out;
}

// Grammar resolution order: explicit --config, then a dataset's grammar.cfg,
// then $CSG_CONFIG, then built-in 2D defaults.
GrammarConfig resolve_grammar(const std::string& config_path, const std::string& data_root) {
    if (!config_path.empty()) return load_grammar(config_path);
    if (!data_root.empty()) {
        const fs::path p = fs::path(data_root) / "grammar.cfg";
        if (fs::exists(p)) return load_grammar(p.string());
    }
    if (const char* env = std::getenv("CSG_CONFIG"); env && *env) return load_grammar(env);
    return GrammarConfig::defaults2d();
}

Raster load_raster(const std::string& path) {
    const std::string ext = fs::path(path).extension().string();
    if (ext == ".pgm") return load_pgm(path);
    return load_packed(path);
}

void save_raster(const std::string& path, const Raster& r) {
    if (r.rank() == 2 && fs::path(path).extension() == ".pgm")
        save_pgm(path, r);
    else
        save_packed(path, r);
}

std::string raster_ext(const Raster& r) { return r.rank() == 2 ? ".pgm" : ".csgb"; }

// Targets for infer/eval/detect: a dataset split (rendered) or loose files.
std::vector<Raster> resolve_targets(const std::string& data_root, const std::string& split,
                                    const std::vector<std::string>& files,
                                    const GrammarConfig& cfg) {
    std::vector<Raster> targets;
    if (!data_root.empty()) {
        for (const DatasetRecord& rec : load_split(data_root, split, cfg, true))
            targets.push_back(rec.raster);
    }
    for (const std::string& f : files) targets.push_back(load_raster(f));
    if (targets.empty()) throw IoError("no targets given (use --data/--split or target files)");
    return targets;
}

struct ArchFlags {
    std::string conv = "8,16,32";
    int code = 96, embed = 32, hidden = 96, fc = 96;
    double dropout = 0.2;
    int stack_k = 0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--conv", conv, "conv channel list, e.g. 8,16,32");
        cmd->add_option("--code", code, "encoder code width");
        cmd->add_option("--embed", embed, "token embedding width");
        cmd->add_option("--hidden", hidden, "GRU hidden width");
        cmd->add_option("--fc", fc, "decoder fc width");
        cmd->add_option("--dropout", dropout, "dropout probability");
        cmd->add_option("--stack-k", stack_k, "stack observation channels K");
    }
    ArchConfig build() const {
        ArchConfig a;
        a.conv_channels = parse_int_list(conv, "--conv");
        a.code_width = code;
        a.embed_width = embed;
        a.hidden_width = hidden;
        a.fc_width = fc;
        a.dropout = dropout;
        a.stack_channels = stack_k;
        return a;
    }
};

// ---------------------------------------------------------------- gen -----

int cmd_gen(const std::string& out, const std::string& dim, const std::string& preset,
            std::uint64_t seed, const std::string& lens, const std::string& counts,
            const std::string& split, bool rasters, const std::string& config_path) {
    GrammarConfig grammar;
    if (!config_path.empty())
        grammar = load_grammar(config_path);
    else
        grammar = dim == "3d" ? GrammarConfig::defaults3d() : GrammarConfig::defaults2d();
    grammar.check();

    DatasetSpec spec;
    if (!lens.empty()) {
        const std::vector<int> ls = parse_int_list(lens, "--len");
        const std::vector<int> cs = parse_int_list(counts, "--count");
        if (ls.size() != cs.size())
            throw CLI::ValidationError("--count", "--len and --count need equal sizes");
        for (int l : ls)
            if (l % 2 == 0)
                throw CLI::ValidationError("--len",
                                           "program lengths must be odd, got " +
                                               std::to_string(l));
        spec.grammar = grammar;
        spec.seed = seed;
        for (std::size_t i = 0; i < ls.size(); ++i) spec.counts[split][ls[i]] = cs[i];
    } else if (preset == "paper-small") {
        spec = DatasetSpec::paper_small(grammar, seed);
    } else {
        throw CLI::ValidationError("--preset", "unknown preset: " + preset);
    }

    generate_dataset(spec, out, rasters);
    std::cout << "dataset written to " << out << "\nmanifest hash: " << std::hex
              << fnv1a_file((fs::path(out) / "manifest.json").string()) << std::dec << '\n';
    return 0;
}

// --------------------------------------------------------------- exec -----

int cmd_exec(const std::string& file, const std::string& out, bool trace, bool keep_going,
             int jobs, const GrammarConfig& grammar) {
    std::ifstream is(file);
    if (!is) throw IoError("cannot open program file: " + file);
    std::vector<std::pair<int, std::string>> lines;  // (line number, text)
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        lines.emplace_back(lineno, line);
    }
    if (!out.empty()) fs::create_directories(out);

    struct Result {
        bool ok = true;
        std::string message;      // diagnostic or depth listing
        ExecResult exec;
    };
    std::vector<Result> results(lines.size());

    auto work = [&](std::size_t i) {
        const auto& [no, text] = lines[i];
        try {
            const Program p = parse_program(text, grammar);
            results[i].exec = execute(p, grammar);
            std::ostringstream os;
            os << "line " << no << ": depths [";
            for (std::size_t s = 0; s < results[i].exec.trace.size(); ++s)
                os << (s ? "," : "") << results[i].exec.trace[s].depth_after;
            os << "]";
            results[i].message = os.str();
        } catch (const std::exception& e) {
            results[i].ok = false;
            results[i].message = "line " + std::to_string(no) + ": " + e.what();
        }
    };

    if (jobs <= 1 || lines.size() < 2) {
        for (std::size_t i = 0; i < lines.size(); ++i) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        const int n = std::min<int>(jobs, int(lines.size()));
        for (int t = 0; t < n; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < lines.size(); i = next++) work(i);
            });
        for (auto& t : pool) t.join();
    }

    int failures = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const Result& r = results[i];
        if (!r.ok) {
            ++failures;
            std::cerr << "error: " << r.message << '\n';
            continue;
        }
        std::cout << r.message << '\n';
        if (!out.empty()) {
            const std::string stem =
                (fs::path(out) / ("line" + std::to_string(lines[i].first))).string();
            save_raster(stem + raster_ext(r.exec.raster), r.exec.raster);
            if (trace)
                for (std::size_t s = 0; s < r.exec.trace.size(); ++s)
                    save_raster(stem + "_step" + std::to_string(s + 1) +
                                    raster_ext(r.exec.trace[s].top),
                                r.exec.trace[s].top);
        }
    }
    if (failures) std::cerr << failures << " program(s) failed\n";
    return failures == 0 || keep_going ? 0 : 1;
}

// -------------------------------------------------------------- train -----

int cmd_train(const std::string& mode, const std::string& data_root,
              const std::string& train_split, const std::string& val_split,
              const std::string& out, const std::string& init_ckpt, const ArchFlags& af,
              TrainConfig cfg, int steps, const GrammarConfig& grammar) {
    grammar.check();
    const Vocabulary vocab = build_vocabulary(grammar);
    fs::create_directories(out);

    PolicyNetwork policy;
    if (!init_ckpt.empty())
        policy = load_checkpoint(init_ckpt, grammar, vocab);
    else
        policy = PolicyNetwork(af.build(), grammar, vocab, cfg.seed);

    const std::string ckpt = (fs::path(out) / "model.ckpt").string();
    if (mode == "supervised") {
        cfg.mode = TrainMode::Supervised;
        cfg.check();
        const auto train = load_split(data_root, train_split, grammar, true);
        std::vector<DatasetRecord> val;
        if (!val_split.empty()) val = load_split(data_root, val_split, grammar, true);
        const auto result = train_supervised(policy, train, val, cfg, ckpt,
                                             (fs::path(out) / "loss.csv").string());
        std::cout << "best epoch " << result.best_epoch << ", val loss "
                  << result.best_val_loss << "\ncheckpoint: " << ckpt << '\n';
    } else if (mode == "reinforce") {
        cfg.mode = TrainMode::Reinforce;
        cfg.check();
        std::vector<Raster> targets;
        for (const DatasetRecord& rec : load_split(data_root, train_split, grammar, true))
            targets.push_back(rec.raster);
        const auto result = train_reinforce(policy, targets, cfg, steps,
                                            (fs::path(out) / "reward.csv").string());
        save_checkpoint(ckpt, policy);
        std::cout << "final mean reward "
                  << (result.rewards.empty() ? 0.0 : result.rewards.back())
                  << "\ncheckpoint: " << ckpt << '\n';
    } else {
        throw CLI::ValidationError("--mode", "expected supervised or reinforce");
    }
    return 0;
}

// -------------------------------------------------- infer / eval / detect --

int cmd_infer(const std::string& ckpt, const std::vector<Raster>& targets, int beam,
              int refine_iters, bool mask, const std::string& out,
              const GrammarConfig& grammar) {
    const Vocabulary vocab = build_vocabulary(grammar);
    const PolicyNetwork policy = load_checkpoint(ckpt, grammar, vocab);
    const NetworkTokenPolicy tp(policy);

    std::ofstream os;
    if (!out.empty()) {
        os.open(out);
        if (!os) throw IoError("cannot open output file: " + out);
    }
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const Raster& target = targets[i];
        const EdgeMap tedges = edge_map(target);
        const auto beams = beam_search(tp, target, beam, mask);
        Program best;
        double best_cd = canvas_diagonal(target);
        for (const auto& r : beams) {
            if (!validate(r.program, grammar).valid) continue;
            const double cd = chamfer(tedges, edge_map(execute(r.program, grammar).raster)).pixels;
            if (cd < best_cd || best.empty()) {
                best_cd = cd;
                best = r.program;
            }
        }
        Program refined = best;
        if (!best.empty() && refine_iters > 0) {
            refined = refine(best, target, refine_iters, grammar);
            best_cd = chamfer(tedges, edge_map(execute(refined, grammar).raster)).pixels;
        }
        std::cout << "target " << i << ": cd " << best_cd << " px\n  " << format_program(best)
                  << "\n  refined: " << format_program(refined) << '\n';
        if (os) os << format_program(refined) << '\n';
    }
    return 0;
}

int cmd_eval(const std::string& ckpt, const std::vector<Raster>& targets, int beam,
             int refine_iters, bool mask, const std::string& out,
             const GrammarConfig& grammar) {
    const Vocabulary vocab = build_vocabulary(grammar);
    const PolicyNetwork policy = load_checkpoint(ckpt, grammar, vocab);
    const NetworkTokenPolicy tp(policy);
    const EvalReport report = eval_reconstruction(tp, targets, beam, refine_iters, grammar, mask);
    if (!out.empty()) report.write_csv(out);
    std::cout << report.summary();
    return 0;
}

int cmd_detect(const std::string& ckpt, const std::string& data_root, const std::string& split,
               int beam, double iou_threshold, bool mask, const std::string& out,
               const GrammarConfig& grammar) {
    const Vocabulary vocab = build_vocabulary(grammar);
    const PolicyNetwork policy = load_checkpoint(ckpt, grammar, vocab);
    const NetworkTokenPolicy tp(policy);

    const auto records = load_split(data_root, split, grammar, true);
    std::vector<std::vector<Detection>> detections;
    std::vector<std::vector<Instruction>> ground_truth;
    for (const DatasetRecord& rec : records) {
        detections.push_back(detection_scores(tp, rec.raster, beam, mask));
        std::vector<Instruction> gt;
        for (const Instruction& instr : rec.program.instructions)
            if (instr.is_primitive()) gt.push_back(instr);
        ground_truth.push_back(std::move(gt));
    }
    const MapResult result = map_evaluation(detections, ground_truth, iou_threshold);

    if (!out.empty()) {
        fs::create_directories(out);
        write_detections_csv((fs::path(out) / "detections.csv").string(), detections);
        std::ofstream os((fs::path(out) / "map.txt").string());
        for (const auto& [cls, ap] : result.per_class_ap)
            os << kind_name(cls) << " AP " << ap << '\n';
        os << "MAP " << result.map << '\n';
    }
    for (const auto& [cls, ap] : result.per_class_ap)
        std::cout << kind_name(cls) << " AP " << ap << '\n';
    std::cout << "MAP " << result.map << '\n';
    return 0;
}

// --------------------------------------------------------------- plot -----

int cmd_plot(const std::string& shaping, const std::string& loss_csv,
             const std::string& reward_csv, const std::string& bars_csv,
             const std::string& out) {
    if (!shaping.empty()) {
        std::vector<PlotSeries> series;
        for (double gamma : parse_double_list(shaping, "--shaping")) {
            PlotSeries s;
            std::ostringstream label;
            label << "gamma=" << gamma;
            s.label = label.str();
            for (int i = 0; i <= 200; ++i) {
                const double x = double(i) / 200.0;
                s.points.emplace_back(x, shape_reward(x, gamma));
            }
            series.push_back(std::move(s));
        }
        write_line_chart(out, "Reward shaping (1-x)^gamma", "chamfer distance (normalized)",
                         "reward", series);
        std::cout << "wrote " << out << '\n';
        return 0;
    }

    auto read_csv = [](const std::string& path) {
        std::ifstream is(path);
        if (!is) throw IoError("cannot open CSV: " + path);
        std::string header;
        if (!std::getline(is, header)) throw IoError("empty CSV: " + path);
        std::vector<std::string> cols;
        std::vector<std::vector<std::string>> rows;
        {
            std::stringstream ss(header);
            std::string c;
            while (std::getline(ss, c, ',')) cols.push_back(c);
        }
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string c;
            std::vector<std::string> row;
            while (std::getline(ss, c, ',')) row.push_back(c);
            if (row.size() != cols.size()) throw IoError("malformed CSV row in " + path);
            rows.push_back(std::move(row));
        }
        return std::pair(cols, rows);
    };

    if (!loss_csv.empty()) {
        const auto [cols, rows] = read_csv(loss_csv);
        std::vector<PlotSeries> series;
        for (std::size_t c = 1; c < cols.size(); ++c) {
            PlotSeries s;
            s.label = cols[c];
            for (const auto& row : rows)
                s.points.emplace_back(std::stod(row[0]), std::stod(row[c]));
            series.push_back(std::move(s));
        }
        write_line_chart(out, "Training curves", cols.empty() ? "x" : cols[0], "value", series);
    } else if (!reward_csv.empty()) {
        const auto [cols, rows] = read_csv(reward_csv);
        std::vector<PlotSeries> series;
        for (std::size_t c = 1; c < std::min<std::size_t>(cols.size(), 3); ++c) {
            PlotSeries s;
            s.label = cols[c];
            for (const auto& row : rows)
                s.points.emplace_back(std::stod(row[0]), std::stod(row[c]));
            series.push_back(std::move(s));
        }
        write_line_chart(out, "Reward curve", cols.empty() ? "x" : cols[0], "reward", series);
    } else if (!bars_csv.empty()) {
        const auto [cols, rows] = read_csv(bars_csv);
        if (cols.size() < 2) throw IoError("bar CSV needs label,value columns");
        std::vector<PlotBar> bars;
        for (const auto& row : rows) bars.push_back({row[0], std::stod(row[1])});
        write_bar_chart(out, "Comparison", cols[0], cols[1], bars);
    } else {
        throw CLI::ValidationError("plot", "one of --shaping/--loss/--reward/--bars required");
    }
    std::cout << "wrote " << out << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CSG program-induction toolkit"};
    app.require_subcommand(1);

    int jobs = int(std::max(1u, std::thread::hardware_concurrency()));
    app.add_option("--jobs", jobs, "parallel worker bound")->capture_default_str();

    // gen
    std::string gen_out, gen_dim = "2d", gen_preset = "paper-small", gen_lens, gen_counts;
    std::string gen_split = "train", gen_config;
    std::uint64_t gen_seed = 0;
    bool gen_rasters = false;
    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--dim", gen_dim, "2d or 3d")->check(CLI::IsMember({"2d", "3d"}));
    gen->add_option("--preset", gen_preset, "dataset preset (paper-small)");
    gen->add_option("--seed", gen_seed, "dataset seed");
    gen->add_option("--len", gen_lens, "program lengths, e.g. 3,5,7 (odd)");
    gen->add_option("--count", gen_counts, "record count per length");
    gen->add_option("--split", gen_split, "split name for --len/--count");
    gen->add_flag("--rasters", gen_rasters, "also write packed raster archives");
    gen->add_option("--config", gen_config, "grammar config file");

    // exec
    std::string exec_file, exec_out, exec_config;
    bool exec_trace = false, exec_keep_going = false;
    auto* exec_cmd = app.add_subcommand("exec", "parse, execute, and render programs");
    exec_cmd->add_option("file", exec_file, "program file, one program per line")->required();
    exec_cmd->add_option("--out", exec_out, "directory for rendered shapes");
    exec_cmd->add_flag("--trace", exec_trace, "write per-step top-of-stack snapshots");
    exec_cmd->add_flag("--keep-going", exec_keep_going, "exit 0 despite per-line errors");
    exec_cmd->add_option("--config", exec_config, "grammar config file");

    // train
    std::string train_mode = "supervised", train_data, train_split = "train", train_val;
    std::string train_out, train_config, train_ckpt;
    ArchFlags train_arch;
    TrainConfig train_cfg = TrainConfig::supervised_defaults();
    double train_lr = -1;
    int train_steps = 100;
    auto* train = app.add_subcommand("train", "train a policy network");
    train->add_option("--mode", train_mode, "supervised or reinforce")
        ->check(CLI::IsMember({"supervised", "reinforce"}));
    train->add_option("--data", train_data, "dataset root")->required();
    train->add_option("--train-split", train_split, "training split name");
    train->add_option("--val-split", train_val, "validation split name");
    train->add_option("--out", train_out, "output directory")->required();
    train->add_option("--ckpt", train_ckpt, "initial checkpoint (reinforce fine-tuning)");
    train->add_option("--config", train_config, "grammar config file");
    train->add_option("--lr", train_lr, "learning rate");
    train->add_option("--batch", train_cfg.batch_size, "batch size");
    train->add_option("--epochs", train_cfg.epochs, "supervised epochs");
    train->add_option("--steps", train_steps, "reinforce update steps");
    train->add_option("--rollouts", train_cfg.rollouts, "rollouts per target (M)");
    train->add_option("--gamma", train_cfg.gamma, "reward shaping exponent");
    train->add_option("--seed", train_cfg.seed, "training seed");
    train_arch.attach(train);

    // shared inference flags
    auto add_infer_flags = [](CLI::App* cmd, std::string& ckpt, std::string& data,
                              std::string& split, std::vector<std::string>& files, int& beam,
                              std::string& config, std::string& mask) {
        cmd->add_option("--ckpt", ckpt, "policy checkpoint")->required();
        cmd->add_option("--data", data, "dataset root for targets");
        cmd->add_option("--split", split, "dataset split for targets");
        cmd->add_option("targets", files, "target raster files (.pgm/.csgb)");
        cmd->add_option("--beam", beam, "beam width k");
        cmd->add_option("--config", config, "grammar config file");
        cmd->add_option("--mask", mask, "grammar mask: on or off")
            ->check(CLI::IsMember({"on", "off"}));
    };

    std::string infer_ckpt, infer_data, infer_split = "test", infer_config, infer_out;
    std::string infer_mask = "on";
    std::vector<std::string> infer_files;
    int infer_beam = 10, infer_refine = 0;
    auto* infer = app.add_subcommand("infer", "decode programs for target shapes");
    add_infer_flags(infer, infer_ckpt, infer_data, infer_split, infer_files, infer_beam,
                    infer_config, infer_mask);
    infer->add_option("--refine-iters", infer_refine, "refinement cycles");
    infer->add_option("--out", infer_out, "write refined programs to this file");

    std::string eval_ckpt, eval_data, eval_split = "test", eval_config, eval_out;
    std::string eval_mask = "on";
    std::vector<std::string> eval_files;
    int eval_beam = 10, eval_refine = 0;
    auto* eval_cmd = app.add_subcommand("eval", "reconstruction metrics report");
    add_infer_flags(eval_cmd, eval_ckpt, eval_data, eval_split, eval_files, eval_beam,
                    eval_config, eval_mask);
    eval_cmd->add_option("--refine-iters", eval_refine, "refinement cycles");
    eval_cmd->add_option("--out", eval_out, "report CSV path");

    std::string det_ckpt, det_data, det_split = "test", det_config, det_out;
    std::string det_mask = "on";
    int det_beam = 10;
    double det_iou = 0.5;
    auto* detect = app.add_subcommand("detect", "primitive detection and MAP");
    detect->add_option("--ckpt", det_ckpt, "policy checkpoint")->required();
    detect->add_option("--data", det_data, "dataset root")->required();
    detect->add_option("--split", det_split, "dataset split");
    detect->add_option("--beam", det_beam, "beam width k");
    detect->add_option("--iou-threshold", det_iou, "match threshold");
    detect->add_option("--config", det_config, "grammar config file");
    detect->add_option("--mask", det_mask, "grammar mask: on or off")
        ->check(CLI::IsMember({"on", "off"}));
    detect->add_option("--out", det_out, "output directory");

    // plot
    std::string plot_shaping, plot_loss, plot_reward, plot_bars, plot_out = "plot.svg";
    auto* plot = app.add_subcommand("plot", "emit SVG charts");
    plot->add_option("--shaping", plot_shaping, "gamma list for (1-x)^gamma curves");
    plot->add_option("--loss", plot_loss, "training-curve CSV");
    plot->add_option("--reward", plot_reward, "reward-curve CSV");
    plot->add_option("--bars", plot_bars, "label,value CSV for a bar chart");
    plot->add_option("--out", plot_out, "SVG output path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_gen(gen_out, gen_dim, gen_preset, gen_seed, gen_lens, gen_counts,
                           gen_split, gen_rasters, gen_config);
        if (exec_cmd->parsed())
            return cmd_exec(exec_file, exec_out, exec_trace, exec_keep_going, jobs,
                            resolve_grammar(exec_config, ""));
        if (train->parsed()) {
            TrainConfig cfg = train_mode == "reinforce" ? TrainConfig::reinforce_defaults()
                                                        : TrainConfig::supervised_defaults();
            cfg.batch_size = train_cfg.batch_size;
            cfg.epochs = train_cfg.epochs;
            cfg.rollouts = train_cfg.rollouts;
            cfg.gamma = train_cfg.gamma;
            cfg.seed = train_cfg.seed;
            if (train_lr > 0) cfg.lr = train_lr;
            return cmd_train(train_mode, train_data, train_split, train_val, train_out,
                             train_ckpt, train_arch, cfg, train_steps,
                             resolve_grammar(train_config, train_data));
        }
        if (infer->parsed()) {
            const GrammarConfig g = resolve_grammar(infer_config, infer_data);
            return cmd_infer(infer_ckpt, resolve_targets(infer_data, infer_split, infer_files, g),
                             infer_beam, infer_refine, infer_mask == "on", infer_out, g);
        }
        if (eval_cmd->parsed()) {
            const GrammarConfig g = resolve_grammar(eval_config, eval_data);
            return cmd_eval(eval_ckpt, resolve_targets(eval_data, eval_split, eval_files, g),
                            eval_beam, eval_refine, eval_mask == "on", eval_out, g);
        }
        if (detect->parsed())
            return cmd_detect(det_ckpt, det_data, det_split, det_beam, det_iou,
                              det_mask == "on", det_out, resolve_grammar(det_config, det_data));
        if (plot->parsed())
            return cmd_plot(plot_shaping, plot_loss, plot_reward, plot_bars, plot_out);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
