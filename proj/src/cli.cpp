#include "polefit/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "polefit/errors.hpp"
#include "polefit/freq_response.hpp"
#include "polefit/montecarlo.hpp"
#include "polefit/order_selection.hpp"
#include "polefit/rational_model.hpp"
#include "polefit/residue_analysis.hpp"
#include "polefit/svg_plot.hpp"
#include "polefit/synth_circuits.hpp"

namespace polefit {

namespace {

using json = nlohmann::json;

// Run-configuration document: a JSON object whose keys are the long option
// names of the invoked subcommand. Command-line flags win over its values.
class JsonConfig : public CLI::Config {
public:
    explicit JsonConfig(const CLI::App* app) : app_(app) {}

    std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}\n"; }

    std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::parse_error& e) {
            throw CLI::ConversionError(std::string("config document: ") + e.what());
        }
        if (!doc.is_object()) {
            throw CLI::ConversionError("config document must be a JSON object");
        }
        const auto subs = app_->get_subcommands();
        std::vector<CLI::ConfigItem> items;
        for (const auto& [key, value] : doc.items()) {
            CLI::ConfigItem item;
            if (!subs.empty()) item.parents = {subs.front()->get_name()};
            item.name = key;
            if (value.is_array()) {
                for (const auto& v : value) item.inputs.push_back(scalar(key, v));
            } else {
                item.inputs.push_back(scalar(key, value));
            }
            items.push_back(std::move(item));
        }
        return items;
    }

private:
    static std::string scalar(const std::string& key, const json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        if (v.is_number()) return v.dump();
        throw CLI::ConversionError("config key '" + key + "' must be a string, number, boolean or array of those");
    }

    const CLI::App* app_;
};

std::string fmt(double v, const char* spec = "%.6g") {
    char buf[48];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string sibling(const std::string& path, const std::string& suffix) {
    std::filesystem::path p(path);
    p.replace_extension();
    return p.string() + suffix;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (path.empty() || !out) {
        throw IoError("cannot write '" + path + "'");
    }
    out << text;
    if (!out) {
        throw IoError("write failed for '" + path + "'");
    }
}

struct SelectionFlags {
    std::string mode = "nonresonant";
    double phase_goal = 0.5;
    double rho_threshold = kDefaultRhoThreshold;
    int max_order = 30;
    std::string weight = "uniform";
    int max_iters = 20;
    bool include_e = false;
    bool no_direct = false;
    bool flip_unstable = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--mode", mode, "Order-selection strategy")
            ->check(CLI::IsMember({"resonant", "nonresonant"}))
            ->capture_default_str();
        cmd->add_option("--phase-goal", phase_goal, "Maximum phase error in degrees")->capture_default_str();
        cmd->add_option("--rho-threshold", rho_threshold, "Prune terms with rho below this")->capture_default_str();
        cmd->add_option("--max-order", max_order, "Largest model order tried")->capture_default_str();
        cmd->add_option("--weight", weight, "Least-squares weighting")
            ->check(CLI::IsMember({"uniform", "inverse_magnitude"}))
            ->capture_default_str();
        cmd->add_option("--max-iters", max_iters, "Pole relocation iterations per fit")->capture_default_str();
        cmd->add_flag("--include-e", include_e, "Fit a proportional term s*e");
        cmd->add_flag("--no-direct", no_direct, "Fit without the constant term d");
        cmd->add_flag("--flip-unstable", flip_unstable, "Reflect right-half-plane poles while relocating");
    }

    [[nodiscard]] OrderSelectionConfig config() const {
        OrderSelectionConfig c;
        c.phase_goal_deg = phase_goal;
        c.max_order = max_order;
        c.fit_options.include_d = !no_direct;
        c.fit_options.include_e = include_e;
        c.fit_options.weight_rule = weight == "inverse_magnitude" ? WeightRule::inverse_magnitude : WeightRule::uniform;
        c.fit_options.max_relocation_iters = max_iters;
        c.fit_options.flip_unstable = flip_unstable;
        c.validate();
        return c;
    }
};

struct SourceFlags {
    std::string preset_name;
    std::string template_path;
    std::optional<double> f_start;
    std::optional<double> f_stop;
    std::optional<int> ppd;
    std::optional<int> linear_points;

    void attach(CLI::App* cmd) {
        auto* p = cmd->add_option("--preset", preset_name, "Shipped circuit preset");
        auto* t = cmd->add_option("--template", template_path, "Circuit template document");
        p->excludes(t);
        cmd->add_option("--f-start", f_start, "First grid frequency in Hz");
        cmd->add_option("--f-stop", f_stop, "Last grid frequency in Hz");
        auto* d = cmd->add_option("--ppd", ppd, "Log grid points per decade");
        auto* l = cmd->add_option("--linear-points", linear_points, "Linear grid point count");
        d->excludes(l);
    }

    [[nodiscard]] std::optional<Preset> preset_value() const {
        if (preset_name.empty()) return std::nullopt;
        return preset(preset_name);
    }

    [[nodiscard]] CircuitTemplate circuit() const {
        if (const auto p = preset_value()) return p->tmpl;
        if (template_path.empty()) {
            throw ArgumentError("one of --preset or --template is required");
        }
        return load_template(template_path);
    }

    [[nodiscard]] FrequencyGrid grid() const {
        const auto p = preset_value();
        const double start = f_start.value_or(p ? p->f_start_hz : 0.0);
        const double stop = f_stop.value_or(p ? p->f_stop_hz : 0.0);
        if (!(start > 0.0) || !(stop > start)) {
            throw ArgumentError("grid needs 0 < --f-start < --f-stop");
        }
        if (linear_points) return make_linear_grid(start, stop, *linear_points);
        return make_log_grid(start, stop, ppd.value_or(p ? p->points_per_decade : 101));
    }
};

// --band low|wide|LO:HI (Hz); low and wide split a preset at its cut frequency.
std::optional<Band> parse_band(const std::string& text, const std::optional<Preset>& p, const FrequencyGrid& grid) {
    if (text.empty()) return std::nullopt;
    if (text == "low" || text == "wide") {
        if (!p) {
            throw ArgumentError("--band " + text + " needs a preset");
        }
        return text == "low" ? Band{grid.front(), p->f_cut_hz} : Band{p->f_cut_hz, grid.back()};
    }
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw ArgumentError("--band expects low, wide or LO:HI");
    }
    try {
        return Band{std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
    } catch (const std::exception&) {
        throw ArgumentError("--band '" + text + "' is not LO:HI in Hz");
    }
}

int run_identify(const std::string& in_path, const std::string& out_path, std::string rho_path, std::string pole_path,
                 const std::string& zeros_path, const std::string& band_text, bool no_prune,
                 const SelectionFlags& sel, std::ostream& out) {
    const auto config = sel.config();
    FrequencyResponse response = load_csv(in_path);
    if (const auto band = parse_band(band_text, std::nullopt, response.grid())) {
        response = band_select(response, band->f_min_hz, band->f_max_hz);
    }
    const RationalModel fitted = select_order(response, selection_mode_from_string(sel.mode), config);

    RationalModel model = fitted;
    RhoReport report = rho_report(fitted, sel.rho_threshold);
    if (!no_prune) {
        PruneResult pruned = prune(fitted, response, sel.rho_threshold, config.fit_options);
        model = std::move(pruned.model);
        report = std::move(pruned.report);
    }

    if (rho_path.empty()) rho_path = sibling(out_path, ".rho.csv");
    if (pole_path.empty()) pole_path = sibling(out_path, ".poles.csv");
    save_model(model, out_path);
    save_rho_csv(report, rho_path);
    save_pole_csv(model, pole_path);
    if (!zeros_path.empty()) {
        std::ostringstream z;
        z << "re_radps,im_radps\n";
        for (const auto& zero : zeros(model)) z << fmt(zero.real(), "%.17g") << ',' << fmt(zero.imag(), "%.17g") << '\n';
        write_text(zeros_path, z.str());
    }

    const auto poles = model.poles();
    const auto counts = classify_stability(poles);
    const auto dropped = std::count_if(report.records.begin(), report.records.end(), [](const RhoRecord& r) { return r.pruned; });
    out << "order: " << model.order() << '\n';
    out << "phase error: " << fmt(model.phase_error_deg) << " deg\n";
    out << "converged: " << (fitted.converged ? "yes" : "no") << '\n';
    out << "pruned terms: " << (no_prune ? 0 : dropped) << '\n';
    out << "stability: " << counts.stable << " stable, " << counts.unstable << " unstable, " << counts.critical
        << " critical\n";
    out << "model: " << out_path << '\n';
    return fitted.converged ? kExitOk : kExitNotConverged;
}

unsigned thread_cap(std::optional<unsigned> flag) {
    unsigned threads = flag.value_or(0);
    if (const char* env = std::getenv("POLEFIT_THREADS"); env && *env) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 0) {
            throw ArgumentError(std::string("POLEFIT_THREADS must be a non-negative integer, got '") + env + "'");
        }
        if (v > 0) threads = threads == 0 ? static_cast<unsigned>(v) : std::min(threads, static_cast<unsigned>(v));
    }
    return threads;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Pole-zero identification of sampled frequency responses", "polefit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "JSON run-configuration document; flags override its values");
    app.config_formatter(std::make_shared<JsonConfig>(&app));
    app.allow_config_extras(false);

    // identify
    auto* identify = app.add_subcommand("identify", "Fit, prune and report one response")->fallthrough();
    std::string id_in;
    std::string id_out;
    std::string id_rho;
    std::string id_poles;
    std::string id_zeros;
    std::string id_band;
    bool id_no_prune = false;
    SelectionFlags id_sel;
    identify->add_option("--in", id_in, "Response CSV")->required();
    identify->add_option("--out", id_out, "Model document to write")->required();
    identify->add_option("--rho-out", id_rho, "Rho report CSV (default: next to --out)");
    identify->add_option("--poles-out", id_poles, "Pole CSV (default: next to --out)");
    identify->add_option("--zeros-out", id_zeros, "Zero CSV");
    identify->add_option("--band", id_band, "Analyze only LO:HI Hz");
    identify->add_flag("--no-prune", id_no_prune, "Keep terms below the rho threshold");
    id_sel.attach(identify);

    // synth
    auto* synth = app.add_subcommand("synth", "Synthesize a response from a circuit template")->fallthrough();
    SourceFlags syn_src;
    std::uint64_t syn_seed = 0;
    std::string syn_out;
    std::string syn_template_out;
    syn_src.attach(synth);
    synth->add_option("--seed", syn_seed, "Noise seed")->capture_default_str();
    synth->add_option("--out", syn_out, "Response CSV to write")->required();
    synth->add_option("--template-out", syn_template_out, "Also write the template document");

    // mc
    auto* mc = app.add_subcommand("mc", "Monte-Carlo dispersion study")->fallthrough();
    SourceFlags mc_src;
    SelectionFlags mc_sel;
    DispersionSpec dispersion;
    dispersion.iterations = 251;
    std::string mc_band;
    std::string mc_out;
    std::vector<std::string> mc_scatter;
    std::optional<unsigned> mc_threads;
    double mc_critical_tol = 0.0;
    mc_src.attach(mc);
    mc_sel.attach(mc);
    mc->add_option("--sigma", dispersion.relative_sigma, "Relative Gaussian dispersion")->capture_default_str();
    mc->add_option("--iters", dispersion.iterations, "Iterations")->capture_default_str();
    mc->add_option("--seed", dispersion.seed, "Base seed")->capture_default_str();
    mc->add_option("--band", mc_band, "Analysis band: low, wide or LO:HI Hz");
    mc->add_option("--out", mc_out, "Pole-map CSV to write");
    mc->add_option("--scatter", mc_scatter, "Scatter filter LO:HI on |imag|/2pi in Hz (repeatable)");
    mc->add_option("--threads", mc_threads, "Worker threads (0 = auto)");
    mc->add_option("--critical-tol", mc_critical_tol, "|re| below this counts as critical (rad/s)");

    // plot
    auto* plot = app.add_subcommand("plot", "Write an SVG pole map")->fallthrough();
    std::vector<std::string> plot_poles;
    std::vector<std::string> plot_low;
    std::vector<std::string> plot_zeros;
    std::string plot_title;
    std::string plot_out;
    plot->add_option("--poles", plot_poles, "Pole CSV (repeatable)");
    plot->add_option("--low-band", plot_low, "Pole CSV whose real poles are drawn blue (repeatable)");
    plot->add_option("--zeros", plot_zeros, "Zero CSV (repeatable)");
    plot->add_option("--title", plot_title, "Plot title");
    plot->add_option("--out", plot_out, "SVG file to write")->required();

    // mimo
    auto* mimo = app.add_subcommand("mimo", "Shared-pole fit over several ports")->fallthrough();
    std::vector<std::string> mimo_in;
    std::string mimo_out;
    std::string mimo_mode = "nonresonant";
    std::string mimo_select = "real";
    int mimo_order = 1;
    double mimo_rho = kDefaultRhoThreshold;
    int mimo_iters = 20;
    mimo->add_option("--in", mimo_in, "Response CSVs on one grid (repeatable)")->required();
    mimo->add_option("--out", mimo_out, "Result document to write");
    mimo->add_option("--mode", mimo_mode, "Seed real poles or complex pairs")
        ->check(CLI::IsMember({"resonant", "nonresonant"}))
        ->capture_default_str();
    mimo->add_option("--order", mimo_order, "Number of shared poles")->capture_default_str();
    mimo->add_option("--rho-threshold", mimo_rho, "Overfit threshold for the report")->capture_default_str();
    mimo->add_option("--max-iters", mimo_iters, "Pole relocation iterations")->capture_default_str();
    mimo->add_option("--select", mimo_select, "Poles ranked: real or all")
        ->check(CLI::IsMember({"real", "all"}))
        ->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitError;
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitError;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }

    try {
        if (identify->parsed()) {
            return run_identify(id_in, id_out, id_rho, id_poles, id_zeros, id_band, id_no_prune, id_sel, out);
        }

        if (synth->parsed()) {
            const CircuitTemplate tmpl = syn_src.circuit();
            const FrequencyGrid grid = syn_src.grid();
            const FrequencyResponse response = synth_response(tmpl, grid, syn_seed);
            save_csv(response, syn_out);
            if (!syn_template_out.empty()) write_text(syn_template_out, template_to_document(tmpl));
            out << "wrote " << grid.size() << " points to " << syn_out << '\n';
            return kExitOk;
        }

        if (mc->parsed()) {
            const CircuitTemplate tmpl = mc_src.circuit();
            const FrequencyGrid grid = mc_src.grid();
            McSettings settings;
            settings.mode = selection_mode_from_string(mc_sel.mode);
            settings.selection = mc_sel.config();
            settings.rho_threshold = mc_sel.rho_threshold;
            settings.critical_tol = mc_critical_tol;
            settings.analysis_band = parse_band(mc_band, mc_src.preset_value(), grid);
            settings.threads = thread_cap(mc_threads);
            const PoleMap map = run_mc(tmpl, dispersion, grid, settings);
            if (!mc_out.empty()) save_pole_map_csv(map, mc_out);

            std::vector<Complex> all;
            for (const auto& it : map.iterations) {
                for (const auto& p : it.poles) {
                    all.push_back(p.pole);
                    if (p.kind == PoleKind::complex_pair) all.push_back(std::conj(p.pole));
                }
            }
            const auto counts = classify_stability(all, mc_critical_tol);
            out << "iterations: " << map.iterations.size() << " (" << map.failed_count() << " failed)\n";
            out << "band: " << fmt(map.band.f_min_hz) << " Hz to " << fmt(map.band.f_max_hz) << " Hz, mode "
                << to_string(map.mode) << '\n';
            out << "stability: " << counts.stable << " stable, " << counts.unstable << " unstable, "
                << counts.critical << " critical\n";
            if (mc_scatter.empty()) mc_scatter.push_back("0:" + fmt(map.band.f_max_hz, "%.17g"));
            for (const auto& filter : mc_scatter) {
                const auto band = parse_band(filter, std::nullopt, grid);
                try {
                    const auto s = scatter_stats(map, band->f_min_hz, band->f_max_hz);
                    out << "scatter [" << fmt(band->f_min_hz) << ", " << fmt(band->f_max_hz) << "] Hz: count "
                        << s.count << ", mean_re " << fmt(s.mean_re) << ", std_re " << fmt(s.std_re) << ", mean_im "
                        << fmt(s.mean_im) << ", std_im " << fmt(s.std_im) << '\n';
                } catch (const ArgumentError&) {
                    out << "scatter [" << fmt(band->f_min_hz) << ", " << fmt(band->f_max_hz)
                        << "] Hz: no poles\n";
                }
            }
            return map.failed_count() == static_cast<int>(map.iterations.size()) ? kExitError : kExitOk;
        }

        if (plot->parsed()) {
            if (plot_poles.empty() && plot_low.empty()) {
                throw ArgumentError("plot needs at least one --poles or --low-band file");
            }
            PoleMapPlot data;
            data.title = plot_title;
            for (const auto& path : plot_poles) {
                auto pts = load_plot_points(path);
                data.poles.insert(data.poles.end(), pts.begin(), pts.end());
            }
            for (const auto& path : plot_low) {
                auto pts = load_plot_points(path);
                data.low_band_poles.insert(data.low_band_poles.end(), pts.begin(), pts.end());
            }
            for (const auto& path : plot_zeros) {
                for (const auto& z : load_plot_points(path)) data.zeros.push_back(z.pole);
            }
            write_text(plot_out, pole_map_svg(data));
            out << "wrote " << plot_out << '\n';
            return kExitOk;
        }

        if (mimo->parsed()) {
            if (mimo_in.size() < 2) {
                throw ArgumentError("mimo needs at least 2 --in files");
            }
            if (mimo_order < 1) {
                throw ArgumentError("--order must be at least 1");
            }
            std::vector<FrequencyResponse> ports;
            for (const auto& path : mimo_in) ports.push_back(load_csv(path));
            const auto& grid = ports.front().grid();
            const double w_lo = 2.0 * std::numbers::pi * grid.front();
            const double w_hi = 2.0 * std::numbers::pi * grid.back();
            std::vector<Complex> seeds;
            if (mimo_mode == "nonresonant") {
                for (int k = 0; k < mimo_order; ++k) {
                    const double t = mimo_order == 1 ? 0.5 : static_cast<double>(k) / (mimo_order - 1);
                    seeds.emplace_back(-w_lo * std::pow(w_hi / w_lo, t), 0.0);
                }
            } else {
                if (mimo_order % 2 != 0) {
                    throw ArgumentError("resonant --order must be even");
                }
                const int pairs = mimo_order / 2;
                for (int k = 0; k < pairs; ++k) {
                    const double w = pairs == 1 ? 0.5 * (w_lo + w_hi) : w_lo + (w_hi - w_lo) * k / (pairs - 1.0);
                    seeds.emplace_back(-0.01 * w, w);
                    seeds.emplace_back(-0.01 * w, -w);
                }
            }
            FitOptions options;
            options.max_relocation_iters = mimo_iters;
            const MimoResult result = mimo_identify(ports, seeds, options, mimo_rho);
            const auto ranks = rank_ports(result, mimo_select == "real" ? select_real_poles()
                                                                         : PoleSelector([](const PoleTerm&) { return true; }));

            if (!mimo_out.empty()) {
                json doc;
                json shared = json::array();
                for (const auto& p : result.shared_poles) shared.push_back({{"re", p.real()}, {"im", p.imag()}});
                doc["shared_poles"] = shared;
                doc["iterations"] = result.iterations;
                json ports_doc = json::array();
                for (std::size_t p = 0; p < result.port_models.size(); ++p) {
                    json rho = json::array();
                    for (const auto& r : result.port_rho[p].records) {
                        rho.push_back(std::isfinite(r.rho) ? json(r.rho) : json(nullptr));
                    }
                    ports_doc.push_back({{"label", result.port_labels[p]},
                                         {"model", json::parse(model_to_document(result.port_models[p]))},
                                         {"rho", rho}});
                }
                doc["ports"] = ports_doc;
                json ranking = json::array();
                for (const auto& r : ranks) ranking.push_back(r.label);
                doc["ranking"] = ranking;
                write_text(mimo_out, doc.dump(2) + "\n");
            }
            out << "rank,port,rho\n";
            for (std::size_t i = 0; i < ranks.size(); ++i) {
                out << i + 1 << ',' << ranks[i].label << ',' << fmt(ranks[i].rho) << '\n';
            }
            return kExitOk;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}

}  // namespace polefit
