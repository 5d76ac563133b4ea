#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "allelic/exact.hpp"
#include "allelic/experiments.hpp"
#include "allelic/fluid.hpp"
#include "allelic/math.hpp"
#include "allelic/parallel.hpp"
#include "allelic/simulate.hpp"

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// data goes to stdout unless --out is given; progress stays on stderr
class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw std::runtime_error("cannot open output path '" + path + "'");
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

private:
    std::ofstream file_;
};

struct SimulateArgs {
    std::string model = "bs";
    double rho = 0.5;
    std::int64_t n = 100;
    std::int64_t replicates = 1;
    std::uint64_t seed = 1;
    std::int64_t d = 0; // 0 = full mode
    bool coupled = false;
    std::string trajectory_path;
    double t_max = 3.0;
    double grid_step = 0.05;
    int threads = 0;
    std::string out;
};

int run_simulate(const SimulateArgs& args) {
    const allelic::LambdaModel model = allelic::parse_model_spec(args.model);
    allelic::SimOptions opt;
    if (args.d > 0) {
        opt.mode = allelic::SimMode::Truncated;
        opt.d = args.d;
    }
    opt.coupled_sites = args.coupled;
    if (!args.trajectory_path.empty()) {
        if (args.d <= 0) throw std::invalid_argument("--trajectory requires --d");
        for (double t = 0.0; t <= args.t_max + 1e-12; t += args.grid_step) opt.sample_times.push_back(t);
    }
    if (model.family == allelic::Family::Beta || model.family == allelic::Family::GridDensity) {
        opt.cache = std::make_shared<allelic::RateTableCache>(model);
    }

    std::vector<allelic::RunResult> results(static_cast<std::size_t>(args.replicates));
    allelic::parallel_replicates(args.replicates, args.threads, [&](std::int64_t r) {
        results[static_cast<std::size_t>(r)] =
            allelic::simulate_freeze(model, args.rho, args.n, opt, allelic::derive_seed(args.seed, static_cast<std::uint64_t>(r)));
    });

    Output output(args.out);
    json header;
    header["schema"] = 1;
    json cfg;
    cfg["command"] = "simulate";
    cfg["model"] = args.model;
    cfg["rho"] = args.rho;
    cfg["n"] = args.n;
    cfg["replicates"] = args.replicates;
    cfg["seed"] = args.seed;
    cfg["mode"] = args.d > 0 ? "truncated" : "full";
    cfg["d"] = args.d;
    cfg["coupled"] = args.coupled;
    header["config"] = cfg;
    output.stream() << header.dump() << '\n';

    for (std::int64_t r = 0; r < args.replicates; ++r) {
        const auto& res = results[static_cast<std::size_t>(r)];
        json line;
        line["replicate"] = r;
        line["seed"] = res.seed;
        line["n"] = res.n;
        line["model"] = args.model;
        line["rho"] = args.rho;
        json spectrum = json::object();
        for (const auto& [size, count] : res.spectrum) {
            if (count != 0) spectrum[std::to_string(size)] = count;
        }
        line["spectrum"] = spectrum;
        line["tail_frozen"] = res.tail_frozen;
        line["N"] = res.n_total;
        line["N_skeleton"] = res.n_skeleton;
        line["S"] = res.s_count;
        line["tree_length"] = res.tree_length;
        line["events"] = res.event_count;
        output.stream() << line.dump() << '\n';
    }

    if (!args.trajectory_path.empty()) {
        std::ofstream traj(args.trajectory_path);
        if (!traj) throw std::runtime_error("cannot open trajectory path '" + args.trajectory_path + "'");
        traj << "replicate,t";
        for (std::int64_t k = 1; k <= args.d; ++k) traj << ",x" << k;
        traj << ",y" << args.d + 1 << ",z" << args.d << '\n';
        for (std::int64_t r = 0; r < args.replicates; ++r) {
            const auto& path = results[static_cast<std::size_t>(r)].trajectory;
            for (std::size_t i = 0; i < path.times.size(); ++i) {
                traj << r << ',' << fmt(path.times[i]);
                for (double v : path.values[i]) traj << ',' << fmt(v);
                traj << '\n';
            }
        }
    }
    return 0;
}

struct ExactArgs {
    std::string model = "bs";
    double rho = 0.5;
    std::int64_t n = 2;
    std::string method = "moehle";
    std::string out;
};

int run_exact(const ExactArgs& args) {
    const allelic::LambdaModel model = allelic::parse_model_spec(args.model);
    allelic::SpectrumDistribution dist;
    if (args.method == "moehle") {
        allelic::MoehleSolver solver(model, args.rho);
        dist = solver.distribution(args.n);
    } else if (args.method == "oracle") {
        dist = allelic::absorption_oracle(model, args.rho, args.n);
    } else if (args.method == "ewens") {
        if (model.family != allelic::Family::Kingman) {
            throw std::invalid_argument("--method ewens applies to the kingman model only");
        }
        dist = allelic::ewens_distribution(2.0 * args.rho, args.n);
    } else {
        throw std::invalid_argument("unknown method '" + args.method + "'");
    }

    json out;
    out["schema"] = 1;
    json cfg;
    cfg["command"] = "exact";
    cfg["model"] = args.model;
    cfg["rho"] = args.rho;
    cfg["n"] = args.n;
    cfg["method"] = args.method;
    out["config"] = cfg;
    out["probs"] = json::array();
    for (const auto& c : allelic::enumerate_configs(args.n)) {
        json e;
        e["config"] = c.values();
        e["prob"] = dist.prob(c);
        out["probs"].push_back(e);
    }
    out["residual"] = dist.residual;
    Output output(args.out);
    output.stream() << out.dump(2) << '\n';
    return 0;
}

struct FluidArgs {
    std::int64_t d = 1;
    double rho = 0.5;
    double t_max = 10.0;
    double step = 0.01;
    double t_point = 0.0;
    bool point = false;
    bool rk4 = false;
    bool residuals = false;
    std::string out;
};

int run_fluid(const FluidArgs& args) {
    Output output(args.out);
    auto& os = output.stream();
    os << "t,x1";
    for (std::int64_t k = 2; k <= args.d; ++k) os << ",x" << k;
    os << ",y" << args.d + 1;
    for (std::int64_t k = 1; k <= args.d; ++k) os << ",z" << k;
    if (args.rk4) {
        for (std::int64_t k = 1; k <= args.d; ++k) os << ",rk4_x" << k;
        os << ",rk4_y" << args.d + 1 << ",rk4_z" << args.d;
    }
    if (args.residuals) os << ",ode_residual";
    os << '\n';

    const auto emit_row = [&](double t, const std::vector<double>* rk4_row) {
        const auto x = allelic::fluid_closed_form(args.d, args.rho, t);
        os << fmt(t);
        for (std::int64_t k = 1; k <= args.d; ++k) os << ',' << fmt(x[static_cast<std::size_t>(k - 1)]);
        os << ',' << fmt(x[static_cast<std::size_t>(args.d)]);
        for (std::int64_t k = 1; k <= args.d; ++k) os << ',' << fmt(allelic::fluid_z(k, args.rho, t));
        if (rk4_row) {
            for (double v : *rk4_row) os << ',' << fmt(v);
        }
        if (args.residuals) {
            const double h = 1e-5;
            const auto up = allelic::fluid_closed_form(args.d, args.rho, t + h);
            const auto down = allelic::fluid_closed_form(args.d, args.rho, std::max(t - h, 0.0));
            const double width = t - h < 0.0 ? h : 2.0 * h;
            const auto b = allelic::fluid_vector_field(args.d, args.rho, x);
            double dist2 = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                dist2 += allelic::sqr((up[i] - down[i]) / width - b[i]);
            }
            os << ',' << fmt(std::sqrt(dist2));
        }
        os << '\n';
    };

    if (args.point) {
        emit_row(args.t_point, nullptr);
        return 0;
    }
    allelic::FluidPath rk4_path;
    if (args.rk4) rk4_path = allelic::integrate_fluid_ode(args.d, args.rho, args.t_max, args.step);
    std::size_t i = 0;
    for (double t = 0.0; t <= args.t_max + 1e-12; t += args.step, ++i) {
        emit_row(std::min(t, args.t_max), args.rk4 ? &rk4_path.values[i] : nullptr);
    }
    return 0;
}

struct ExperimentArgs {
    std::string config_path;
    std::string out_dir;
    int threads = -1;
};

int run_experiment_cmd(const ExperimentArgs& args) {
    allelic::ExperimentConfig cfg = allelic::load_experiment_config(args.config_path);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.threads >= 0) cfg.threads = args.threads;
    std::cerr << "running experiment '" << cfg.experiment << "'\n";
    const allelic::SweepReport report = allelic::run_experiment(cfg);

    if (!cfg.out_dir.empty()) {
        const std::string csv_path = cfg.out_dir + "/" + report.experiment + ".csv";
        const std::string json_path = cfg.out_dir + "/" + report.experiment + "_summary.json";
        std::ofstream csv(csv_path);
        if (!csv) throw std::runtime_error("cannot open '" + csv_path + "'");
        csv << report.to_csv();
        std::ofstream js(json_path);
        if (!js) throw std::runtime_error("cannot open '" + json_path + "'");
        js << report.to_summary_json() << '\n';
        std::cerr << "wrote " << csv_path << " and " << json_path << '\n';
    }
    std::cout << report.to_summary_json() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lambda-coalescents with freeze: simulation, exact spectra, fluid limits"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "event-driven coalescent-with-freeze replicates (NDJSON)");
    sim_cmd->add_option("--model", sim.model, "kingman | bs | star | beta:<alpha> | grid:<csv>");
    sim_cmd->add_option("--rho", sim.rho, "freeze (mutation) rate per active block")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--n", sim.n, "initial sample size")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--replicates", sim.replicates, "number of replicates")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--seed", sim.seed, "base seed; replicate r uses hash(seed, r)");
    sim_cmd->add_option("--d", sim.d, "truncation cutoff; omit for full mode");
    sim_cmd->add_flag("--coupled", sim.coupled, "track ghost lineages for segregating sites");
    sim_cmd->add_option("--trajectory", sim.trajectory_path, "sidecar CSV of rescaled trajectories");
    sim_cmd->add_option("--t-max", sim.t_max, "trajectory horizon in rescaled time");
    sim_cmd->add_option("--grid-step", sim.grid_step, "trajectory grid step")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--threads", sim.threads, "worker threads (0 = hardware)");
    sim_cmd->add_option("--out", sim.out, "output path (default stdout)");

    ExactArgs exact;
    auto* exact_cmd = app.add_subcommand("exact", "exact spectrum distribution for small n (JSON)");
    exact_cmd->add_option("--model", exact.model, "kingman | bs | star | beta:<alpha> | grid:<csv>");
    exact_cmd->add_option("--rho", exact.rho, "freeze rate per active block")->check(CLI::PositiveNumber);
    exact_cmd->add_option("--n", exact.n, "sample size")->check(CLI::PositiveNumber);
    exact_cmd->add_option("--method", exact.method, "moehle | oracle | ewens");
    exact_cmd->add_option("--out", exact.out, "output path (default stdout)");

    FluidArgs fluid;
    auto* fluid_cmd = app.add_subcommand("fluid", "closed-form fluid trajectory (CSV)");
    fluid_cmd->add_option("--d", fluid.d, "truncation dimension")->check(CLI::PositiveNumber);
    fluid_cmd->add_option("--rho", fluid.rho, "freeze rate")->check(CLI::PositiveNumber);
    fluid_cmd->add_option("--t-max", fluid.t_max, "time horizon");
    fluid_cmd->add_option("--step", fluid.step, "grid step")->check(CLI::PositiveNumber);
    fluid_cmd->add_option("--t", fluid.t_point, "time for --point");
    fluid_cmd->add_flag("--point", fluid.point, "emit a single row at --t");
    fluid_cmd->add_flag("--rk4", fluid.rk4, "add RK4 integration columns");
    fluid_cmd->add_flag("--residuals", fluid.residuals, "add the ODE residual column");
    fluid_cmd->add_option("--out", fluid.out, "output path (default stdout)");

    ExperimentArgs exp;
    auto* exp_cmd = app.add_subcommand("experiment", "run a configured experiment sweep");
    exp_cmd->add_option("--config", exp.config_path, "key=value or JSON config file")->required();
    exp_cmd->add_option("--out-dir", exp.out_dir, "override the config out_dir");
    exp_cmd->add_option("--threads", exp.threads, "override the config thread count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sim_cmd->parsed()) return run_simulate(sim);
        if (exact_cmd->parsed()) return run_exact(exact);
        if (fluid_cmd->parsed()) return run_fluid(fluid);
        if (exp_cmd->parsed()) return run_experiment_cmd(exp);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
