#include "liftc/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "liftc/autodiff.hpp"
#include "liftc/parse.hpp"
#include "liftc/synthetic.hpp"
#include "liftc/train.hpp"
#include "liftc/zoo.hpp"

namespace liftc {

namespace {

namespace fs = std::filesystem;

enum class LogLevel { error = 0, info = 1, debug = 2 };

LogLevel log_level() {
    const char* env = std::getenv("LIFTC_LOG");
    if (!env)
        return LogLevel::error;
    std::string v = env;
    if (v == "debug")
        return LogLevel::debug;
    if (v == "info")
        return LogLevel::info;
    return LogLevel::error;
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::info)
        std::cerr << "[liftc] " << msg << "\n";
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    if (fs::path(path).has_parent_path()) {
        std::error_code ec;
        fs::create_directories(fs::path(path).parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path);
    out << content;
    if (!out)
        throw IoError("failed writing " + path);
}

// Reproducible run description: line-oriented `key = value` with CLI flag
// overrides on top.
struct Manifest {
    std::string template_path;
    std::string examples_path;
    std::string out_dir = "out";
    std::string params_path;
    std::string zoo;
    int dim = 10;
    int layers = 0;
    int input_dim = 4;
    int kernel = 3;
    int arity = 3;
    std::string features; // comma-separated feature predicates
    std::string edge;     // edge predicate override
    double lr = 1e-3;
    int epochs = 200;
    long long seed = 0;
    std::string loss = "bce";
    std::string optimizer = "adam";
    std::string init = "glorot";
    int folds = 0;
    int jobs = 0;
    long long max_atoms = 10'000'000;

    void load(const std::string& path) {
        std::istringstream in(read_file(path));
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto pos = line.find('%'); pos != std::string::npos)
                line.erase(pos);
            auto eq = line.find('=');
            auto trim = [](std::string s) {
                const char* ws = " \t\r";
                s.erase(0, s.find_first_not_of(ws));
                auto end = s.find_last_not_of(ws);
                s.erase(end == std::string::npos ? 0 : end + 1);
                return s;
            };
            if (eq == std::string::npos) {
                if (!trim(line).empty())
                    throw ConfigError(path + ":" + std::to_string(lineno) +
                                      ": expected `key = value`");
                continue;
            }
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            set(key, value, path + ":" + std::to_string(lineno));
        }
    }

    void set(const std::string& key, const std::string& value, const std::string& where) {
        if (key == "template") template_path = value;
        else if (key == "examples") examples_path = value;
        else if (key == "out") out_dir = value;
        else if (key == "params") params_path = value;
        else if (key == "zoo") zoo = value;
        else if (key == "dim") dim = static_cast<int>(parse_double(value));
        else if (key == "layers") layers = static_cast<int>(parse_double(value));
        else if (key == "inputDim") input_dim = static_cast<int>(parse_double(value));
        else if (key == "kernel") kernel = static_cast<int>(parse_double(value));
        else if (key == "arity") arity = static_cast<int>(parse_double(value));
        else if (key == "features") features = value;
        else if (key == "edge") edge = value;
        else if (key == "lr") lr = parse_double(value);
        else if (key == "epochs") epochs = static_cast<int>(parse_double(value));
        else if (key == "seed") seed = static_cast<long long>(parse_double(value));
        else if (key == "loss") loss = value;
        else if (key == "optimizer") optimizer = value;
        else if (key == "init") init = value;
        else if (key == "folds") folds = static_cast<int>(parse_double(value));
        else if (key == "jobs") jobs = static_cast<int>(parse_double(value));
        else if (key == "maxAtoms") max_atoms = static_cast<long long>(parse_double(value));
        else throw ConfigError(where + ": unknown manifest key '" + key + "'");
    }

    Template resolve_template(std::vector<SourceSpan>* rule_spans = nullptr) const {
        if (!template_path.empty() && !zoo.empty())
            throw ConfigError("give either a template file or a zoo model, not both");
        if (!template_path.empty())
            return parse_template(read_file(template_path), template_path, rule_spans);
        if (zoo.empty())
            throw ConfigError("no template: set `template` or `zoo`");
        auto model = zoo_from_name(zoo);
        if (!model)
            throw ConfigError("unknown zoo model '" + zoo + "'");
        ZooSpec spec = default_spec(*model);
        spec.dim = dim;
        if (layers > 0)
            spec.layers = layers;
        spec.input_dim = input_dim;
        spec.kernel = kernel;
        spec.arity = arity;
        if (!features.empty()) {
            spec.feature_predicates.clear();
            std::istringstream fs_in(features);
            std::string item;
            while (std::getline(fs_in, item, ','))
                if (!item.empty())
                    spec.feature_predicates.push_back(item);
        }
        if (!edge.empty())
            spec.edge_predicate = edge;
        return instantiate(spec);
    }

    std::vector<Example> resolve_examples() const {
        if (examples_path.empty())
            throw ConfigError("no examples: set `examples`");
        return parse_examples(read_file(examples_path), examples_path);
    }

    GroundLimits limits() const {
        GroundLimits l;
        l.max_atoms = static_cast<std::size_t>(max_atoms);
        return l;
    }

    TrainConfig train_config() const {
        TrainConfig cfg;
        cfg.learning_rate = lr;
        cfg.epochs = epochs;
        cfg.seed = static_cast<std::uint64_t>(seed);
        cfg.jobs = static_cast<std::size_t>(jobs);
        if (loss == "bce") cfg.loss_kind = LossKind::bce;
        else if (loss == "mse") cfg.loss_kind = LossKind::mse;
        else throw ConfigError("unknown loss '" + loss + "'");
        if (optimizer == "adam") cfg.optimizer = OptimizerKind::adam;
        else if (optimizer == "sgd") cfg.optimizer = OptimizerKind::sgd;
        else throw ConfigError("unknown optimizer '" + optimizer + "'");
        if (init == "glorot") cfg.init = InitScheme::glorot;
        else if (init == "uniform") cfg.init = InitScheme::uniform;
        else if (init == "constant") cfg.init = InitScheme::constant;
        else throw ConfigError("unknown init scheme '" + init + "'");
        cfg.validate();
        return cfg;
    }
};

void add_manifest_flags(CLI::App* cmd, Manifest& m, std::string& manifest_path) {
    cmd->add_option("--manifest", manifest_path, "manifest file (key = value lines)");
    cmd->add_option("--template", m.template_path, "template file (.tpl)");
    cmd->add_option("--examples", m.examples_path, "examples file (.exs)");
    cmd->add_option("--out", m.out_dir, "output directory");
    cmd->add_option("--params", m.params_path, "parameter file");
    cmd->add_option("--zoo", m.zoo, "zoo model name instead of a template file");
    cmd->add_option("--dim", m.dim, "latent dimension");
    cmd->add_option("--layers", m.layers, "layer count (0 = model default)");
    cmd->add_option("--input-dim", m.input_dim, "input feature dimension");
    cmd->add_option("--features", m.features, "comma-separated feature predicates");
    cmd->add_option("--edge", m.edge, "edge predicate name");
    cmd->add_option("--lr", m.lr, "learning rate");
    cmd->add_option("--epochs", m.epochs, "training epochs");
    cmd->add_option("--seed", m.seed, "run seed");
    cmd->add_option("--loss", m.loss, "loss kind: bce | mse");
    cmd->add_option("--optimizer", m.optimizer, "optimizer: adam | sgd");
    cmd->add_option("--init", m.init, "init scheme: glorot | uniform | constant");
    cmd->add_option("--folds", m.folds, "cross-validation folds (0 = plain training)");
    cmd->add_option("--jobs", m.jobs, "compilation workers (0 = all cores)");
    cmd->add_option("--max-atoms", m.max_atoms, "grounding atom cap");
}

std::string metrics_block(const Metrics& m) {
    std::string out;
    out += "loss=" + format_double(m.loss) + "\n";
    out += "accuracy=" + format_double(m.accuracy) + "\n";
    for (std::size_t i = 0; i < m.per_fold.size(); ++i) {
        out += "fold" + std::to_string(i) + ".trainLoss=" +
               format_double(m.per_fold[i].train_loss) + "\n";
        out += "fold" + std::to_string(i) + ".valLoss=" +
               format_double(m.per_fold[i].val_loss) + "\n";
        out += "fold" + std::to_string(i) + ".testAcc=" +
               format_double(m.per_fold[i].test_accuracy) + "\n";
    }
    return out;
}

int cmd_validate(const Manifest& m) {
    std::vector<SourceSpan> spans;
    Template tpl = m.resolve_template(&spans);
    auto diags = validate_template(tpl);
    for (const auto& d : diags) {
        if (d.rule_index >= 0 && static_cast<std::size_t>(d.rule_index) < spans.size())
            std::cout << spans[d.rule_index].to_string() << ": ";
        std::cout << "rule " << d.rule_index << ": " << d.message << "\n";
    }
    if (!m.examples_path.empty())
        m.resolve_examples();
    if (diags.empty()) {
        std::cout << "ok\n";
        return 0;
    }
    return 1;
}

int cmd_ground(const Manifest& m) {
    Template tpl = m.resolve_template();
    auto examples = m.resolve_examples();
    for (std::size_t e = 0; e < examples.size(); ++e) {
        for (const auto& query : examples[e].queries) {
            std::cout << "% example " << e << " query " << query.atom.to_string() << "\n";
            auto gp = ground_for_query(tpl, examples[e], query.atom, m.limits());
            if (!gp) {
                std::cout << "NOT ENTAILED\n";
                continue;
            }
            std::cout << dump_ground_program(*gp);
        }
    }
    return 0;
}

int cmd_train(const Manifest& m) {
    Template tpl = m.resolve_template();
    auto diags = validate_template(tpl);
    if (!diags.empty()) {
        for (const auto& d : diags)
            std::cerr << "rule " << d.rule_index << ": " << d.message << "\n";
        return 1;
    }
    auto examples = m.resolve_examples();
    TrainConfig cfg = m.train_config();
    Dataset ds = compile_dataset(tpl, examples, cfg.jobs, true, m.limits());
    log_info("compiled " + std::to_string(ds.items.size()) + " graphs");

    if (m.folds > 0) {
        Metrics metrics = cross_validate(ds, cfg, m.folds);
        const std::string block = metrics_block(metrics);
        write_file((fs::path(m.out_dir) / "metrics.txt").string(), block);
        std::cout << block;
        return 0;
    }

    std::string log;
    TrainRun run = train(ds, cfg, [&](int epoch, double train_loss) {
        log += "epoch=" + std::to_string(epoch) + " trainLoss=" + format_double(train_loss) +
               "\n";
    });
    std::ostringstream params_text;
    save_params(run.params, params_text);
    write_file((fs::path(m.out_dir) / "train.log").string(), log);
    write_file((fs::path(m.out_dir) / "params.txt").string(), params_text.str());
    const std::string block = metrics_block(run.final_metrics);
    write_file((fs::path(m.out_dir) / "metrics.txt").string(), block);
    std::cout << log << block;
    return 0;
}

int cmd_evaluate(const Manifest& m) {
    Template tpl = m.resolve_template();
    auto examples = m.resolve_examples();
    if (m.params_path.empty())
        throw ConfigError("evaluate needs --params");
    std::istringstream params_in(read_file(m.params_path));
    ParameterStore params = load_params(params_in);
    TrainConfig cfg = m.train_config();
    Dataset ds = compile_dataset(tpl, examples, cfg.jobs, true, m.limits());
    Metrics metrics = evaluate(ds, params, cfg);
    std::cout << metrics_block(metrics);
    return 0;
}

int cmd_export(const Manifest& m, const std::string& what) {
    if (what == "zoo") {
        auto files = export_zoo(m.out_dir);
        for (const auto& f : files)
            std::cout << f << "\n";
        return 0;
    }
    if (what == "params") {
        Template tpl = m.resolve_template();
        TrainConfig cfg = m.train_config();
        ParameterStore params = init_params(tpl, cfg, cfg.seed);
        std::ostringstream text;
        save_params(params, text);
        const std::string path = (fs::path(m.out_dir) / "params.txt").string();
        write_file(path, text.str());
        std::cout << path << "\n";
        return 0;
    }
    if (what == "dot") {
        Template tpl = m.resolve_template();
        auto examples = m.resolve_examples();
        if (examples.empty() || examples[0].queries.empty())
            throw ConfigError("dot export needs at least one example with a query");
        auto gp = ground_for_query(tpl, examples[0], examples[0].queries[0].atom);
        if (!gp)
            throw ConfigError("the first query is not entailed; nothing to draw");
        ComputationGraph g =
            prune(build_graph(tpl, *gp, examples[0].queries[0].atom));
        const std::string path = (fs::path(m.out_dir) / "graph.dot").string();
        write_file(path, export_dot(g));
        std::cout << path << "\n" << graph_stats(g) << "\n";
        return 0;
    }
    throw ConfigError("unknown export target '" + what + "' (expected dot|params|zoo)");
}

int cmd_gen(const std::string& kind_name, int count, long long seed, bool self_loops,
            const std::string& out_path) {
    auto kind = synthetic_from_name(kind_name);
    if (!kind)
        throw ConfigError("unknown dataset kind '" + kind_name + "'");
    SyntheticOptions opts;
    opts.kind = *kind;
    opts.count = count;
    opts.seed = static_cast<std::uint64_t>(seed);
    opts.self_loops = self_loops;
    auto examples = gen_synthetic(opts);
    write_file(out_path, serialize(examples));
    std::cout << out_path << "\n";
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"differentiable weighted-Datalog engine"};
    app.require_subcommand(1);

    Manifest manifest;
    std::string manifest_path;
    std::string export_what = "dot";
    std::string gen_kind = "triangleTask";
    int gen_count = 2;
    long long gen_seed = 0;
    bool gen_self_loops = false;
    std::string gen_out = "dataset.exs";

    auto* validate = app.add_subcommand("validate", "check a template and examples");
    add_manifest_flags(validate, manifest, manifest_path);
    auto* ground = app.add_subcommand("ground", "dump the restricted grounding per query");
    add_manifest_flags(ground, manifest, manifest_path);
    auto* train_cmd = app.add_subcommand("train", "train and write log/params/metrics");
    add_manifest_flags(train_cmd, manifest, manifest_path);
    auto* eval_cmd = app.add_subcommand("evaluate", "evaluate saved parameters");
    add_manifest_flags(eval_cmd, manifest, manifest_path);
    auto* export_cmd = app.add_subcommand("export", "export dot | params | zoo");
    add_manifest_flags(export_cmd, manifest, manifest_path);
    export_cmd->add_option("--what", export_what, "dot | params | zoo");
    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    gen->add_option("--kind", gen_kind, "triangleTask | chainLengthTask | molToy");
    gen->add_option("--n", gen_count, "number of examples")->required();
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_flag("--self-loops", gen_self_loops, "emit self-loop edges (triangleTask)");
    gen->add_option("--gen-out", gen_out, "output .exs path")->required();

    std::vector<std::string> argv = args;
    std::reverse(argv.begin(), argv.end());
    try {
        app.parse(argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (!manifest_path.empty()) {
            Manifest from_file;
            from_file.load(manifest_path);
            // Explicit flags win over manifest entries.
            Manifest merged = from_file;
            CLI::App* sub = app.get_subcommands().front();
            auto apply_if_set = [&](const char* flag, auto member) {
                if (sub->count(flag))
                    merged.*member = manifest.*member;
            };
            apply_if_set("--template", &Manifest::template_path);
            apply_if_set("--examples", &Manifest::examples_path);
            apply_if_set("--out", &Manifest::out_dir);
            apply_if_set("--params", &Manifest::params_path);
            apply_if_set("--zoo", &Manifest::zoo);
            apply_if_set("--dim", &Manifest::dim);
            apply_if_set("--layers", &Manifest::layers);
            apply_if_set("--input-dim", &Manifest::input_dim);
            apply_if_set("--features", &Manifest::features);
            apply_if_set("--edge", &Manifest::edge);
            apply_if_set("--lr", &Manifest::lr);
            apply_if_set("--epochs", &Manifest::epochs);
            apply_if_set("--seed", &Manifest::seed);
            apply_if_set("--loss", &Manifest::loss);
            apply_if_set("--optimizer", &Manifest::optimizer);
            apply_if_set("--init", &Manifest::init);
            apply_if_set("--folds", &Manifest::folds);
            apply_if_set("--jobs", &Manifest::jobs);
            apply_if_set("--max-atoms", &Manifest::max_atoms);
            manifest = merged;
        }

        if (validate->parsed())
            return cmd_validate(manifest);
        if (ground->parsed())
            return cmd_ground(manifest);
        if (train_cmd->parsed())
            return cmd_train(manifest);
        if (eval_cmd->parsed())
            return cmd_evaluate(manifest);
        if (export_cmd->parsed())
            return cmd_export(manifest, export_what);
        if (gen->parsed())
            return cmd_gen(gen_kind, gen_count, gen_seed, gen_self_loops, gen_out);
        return 0;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace liftc
