// textae — compress sparse TF-IDF text features with a tied-weight
// autoencoder and evaluate reconstruction plus downstream classification
// against PCA / SelectKBest baselines.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "textae/pipeline.hpp"

namespace {

textae::RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override) {
    const std::string text = textae::read_text_file(path);
    textae::json j;
    try {
        j = textae::json::parse(text);
    } catch (const textae::json::exception& e) {
        throw textae::ConfigError(std::string("config parse: ") + e.what());
    }
    textae::RunConfig cfg = textae::run_config_from_json(j);
    if (seed_override) {
        cfg.seed = *seed_override;
        // keep the derived synth seed consistent with the new root seed
        if (cfg.data.kind == textae::DataKind::synth && !j.contains("config") &&
            (!j.contains("data") || !j.at("data").contains("seed")))
            cfg.data.synth.seed = textae::derive_seed(cfg.seed, "data");
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparse-text autoencoder compression pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed_override;
    bool quiet = false;

    auto add_common = [&](CLI::App* cmd, bool need_config) {
        auto* opt = cmd->add_option("--config", config_path, "JSON run configuration");
        if (need_config) opt->required();
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--seed", seed_override, "override the config seed");
        cmd->add_flag("--quiet", quiet, "suppress progress notes");
    };

    auto* synth = app.add_subcommand("synth", "generate a synthetic corpus CSV + manifest");
    add_common(synth, true);

    auto* pipeline = app.add_subcommand("pipeline", "run the full compression/evaluation pipeline");
    add_common(pipeline, true);

    auto* compare = app.add_subcommand("compare", "align metrics across run summaries");
    std::vector<std::string> summary_paths;
    compare->add_option("summaries", summary_paths, "run_summary.json files")->required();
    compare->add_option("--out", out_dir, "output directory");
    compare->add_flag("--quiet", quiet, "suppress progress notes");

    auto* plotdata =
        app.add_subcommand("infoplane-plotdata", "emit the information-plane trajectory CSV");
    add_common(plotdata, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            textae::RunConfig cfg = load_config(config_path, seed_override);
            if (cfg.data.kind != textae::DataKind::synth)
                throw textae::ConfigError("synth: config must use data.kind 'synth'");
            const auto manifest = textae::cmd_synth(cfg.data.synth, out_dir);
            if (!quiet)
                std::fprintf(stderr, "[textae] corpus written, fingerprint %s\n",
                             manifest.at("fingerprint").get<std::string>().c_str());
        } else if (pipeline->parsed()) {
            textae::RunConfig cfg = load_config(config_path, seed_override);
            textae::run_pipeline(cfg, out_dir, quiet);
        } else if (compare->parsed()) {
            std::vector<textae::json> summaries;
            for (const auto& p : summary_paths) {
                try {
                    summaries.push_back(textae::json::parse(textae::read_text_file(p)));
                } catch (const textae::json::exception& e) {
                    throw textae::DataError("compare: '" + p + "': " + e.what());
                }
            }
            const std::string table = textae::cmd_compare(summaries);
            std::filesystem::create_directories(out_dir);
            textae::write_text_file(
                (std::filesystem::path(out_dir) / "comparison.csv").string(), table);
            std::fputs(table.c_str(), stdout);
        } else if (plotdata->parsed()) {
            textae::RunConfig cfg = load_config(config_path, seed_override);
            cfg.infoplane.enabled = true;
            if (cfg.reducer.kind != textae::ReducerKind::ae &&
                cfg.reducer.kind != textae::ReducerKind::lae)
                throw textae::ConfigError("infoplane-plotdata requires reducer 'ae' or 'lae'");
            // run only as far as needed: reuse the pipeline in split mode,
            // which trains one model and writes infoplane.csv alongside it
            cfg.eval.mode = textae::EvalMode::split;
            textae::run_pipeline(cfg, out_dir, quiet);
        }
    } catch (const textae::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const textae::DivergenceError& e) {
        std::fprintf(stderr, "divergence: %s\n", e.what());
        return 4;
    } catch (const textae::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const textae::IoError& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
