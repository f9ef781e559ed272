// Command-line driver: single trials, config-file sweeps and figure presets.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "mcfsim/harness.hpp"

using namespace mcfsim;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitCalibration = 3;

SweepSpec read_sweep(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    return parse_sweep_config(in);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte-Carlo crosstalk simulator for multicore-fiber IM/DD links"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    bool quick = false, dump_symbols = false, dump_waveforms = false, verbose = false;
    std::string out_dir = "out";
    std::size_t trial_index = 0;
    std::string preset_name;
    std::vector<std::string> overrides;

    app.add_option("--seed", seed, "master seed (overrides link.master_seed)");
    app.add_flag("--quick", quick, "8192 symbols per trial, repeats / 4");
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_flag("--dump-symbols", dump_symbols, "write equalized symbols per trial");
    app.add_flag("--dump-waveforms", dump_waveforms, "write victim/leak fields and photocurrent per trial");
    app.add_flag("-v,--verbose", verbose, "per-trial progress on stderr");
    app.add_option("-s,--set", overrides, "extra key=value config overrides");

    auto* run = app.add_subcommand("run", "single trial of the configured link");
    run->add_option("--config", config_path, "config file");
    run->add_option("--trial", trial_index, "trial index")->capture_default_str();

    auto* sweep = app.add_subcommand("sweep", "sweep described by a config file");
    sweep->add_option("--config", config_path, "config file with sweep.axis / sweep.values")->required();

    auto* pre = app.add_subcommand("preset", "figure scenario");
    pre->add_option("name", preset_name, "preset name")
        ->required()
        ->check(CLI::IsMember(preset_names()));

    CLI11_PARSE(app, argc, argv);

    try {
        std::vector<SweepSpec> series;
        if (*run || *sweep) {
            SweepSpec spec;
            if (*sweep) {
                spec = read_sweep(config_path);
            } else {
                spec.label = "run";
                if (!config_path.empty()) spec.base = load_config(config_path);
                spec.axis = SweepAxis::xt_db;
                spec.values = {spec.base.target_xt_db};
                spec.base.repeats = 1;
            }
            series.push_back(std::move(spec));
        } else {
            series = preset(preset_name).series;
        }

        for (auto& s : series) {
            for (const auto& kv : overrides) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw ConfigError("--set expects key=value, got " + kv);
                apply_config_value(s.base, kv.substr(0, eq), kv.substr(eq + 1));
            }
            if (seed) s.base.master_seed = *seed;
            s.validate();
        }

        const std::filesystem::path out(out_dir);
        Calibrator cal(out / "calibration");
        SweepOptions opts;
        opts.quick = quick;
        opts.dump_symbols = dump_symbols;
        opts.dump_waveforms = dump_waveforms;
        opts.out_dir = out;
        opts.progress = verbose;

        if (*run) {
            LinkConfig cfg = series.front().base;
            if (quick) cfg = quick_config(cfg);
            const double s2 = cfg.mode == TrialMode::full ? cal.sigma2(cfg) : 0.0;
            TrialArtifacts art;
            TrialResult t = run_trial(cfg, trial_index, s2, &art);
            t.axis_value = cfg.target_xt_db;
            SweepResult r{"run", SweepAxis::xt_db, {t}, {aggregate(t.axis_value, {t})}};
            std::filesystem::create_directories(out);
            std::ofstream f(out / "run_trials.csv");
            write_trials_csv(f, r);
            write_trials_csv(std::cout, r);
            return 0;
        }

        for (const auto& s : series) {
            const SweepResult r = run_sweep(s, cal, opts);
            std::cout << "# " << r.label << " (" << axis_name(r.axis) << ")\n";
            write_aggregate_csv(std::cout, r);
        }
    } catch (const CalibrationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCalibration;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return 0;
}
