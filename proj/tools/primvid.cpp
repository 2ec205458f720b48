#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "primvid/cli.hpp"
#include "primvid/error.hpp"

using namespace primvid;

int main(int argc, char** argv) {
    CLI::App app{"Synthetic temporal video QA dataset generator"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Generate videos, sidecars and a manifest from a config file");
    std::string gen_config, gen_out, gen_purpose, gen_difficulty;
    std::optional<std::uint64_t> gen_seed_base;
    std::optional<int> gen_workers;
    bool gen_images = false, gen_fallback = false, gen_quiet = false;
    gen->add_option("config", gen_config, "JSON generation config")->required()->check(CLI::ExistingFile);
    gen->add_option("-o,--out", gen_out, "Output dataset directory")->required();
    gen->add_option("--seed-base", gen_seed_base, "Override the first seed");
    gen->add_option("--workers", gen_workers, "Worker threads (0: CPU count)");
    gen->add_option("--purpose", gen_purpose, "Override purpose (rl or cot)");
    gen->add_option("--difficulty", gen_difficulty, "Override difficulty (standard or hard)");
    gen->add_flag("--image-sequence", gen_images, "Write PNG sequences instead of encoded video");
    gen->add_flag("--image-sequence-fallback", gen_fallback, "Fall back to PNG sequences if the encoder is missing");
    gen->add_flag("-q,--quiet", gen_quiet, "No progress output");

    // augment-cot
    auto* aug = app.add_subcommand("augment-cot", "Attach verified chain-of-thought reasoning to a manifest");
    std::string aug_manifest, aug_config, aug_out;
    std::optional<int> aug_iters, aug_conc;
    aug->add_option("manifest", aug_manifest, "Input manifest")->required()->check(CLI::ExistingFile);
    aug->add_option("-c,--config", aug_config, "JSON backend config (default: local mocks)")->check(CLI::ExistingFile);
    aug->add_option("-o,--out", aug_out, "Output directory")->required();
    aug->add_option("--max-iters", aug_iters, "Generate/verify iterations per sample");
    aug->add_option("--concurrency", aug_conc, "Samples processed in parallel");

    // validate
    auto* val = app.add_subcommand("validate", "Check a manifest, its files and replay soundness");
    std::string val_manifest;
    std::vector<std::string> val_disjoint;
    bool val_no_probe = false, val_no_replay = false, val_json = false;
    val->add_option("manifest", val_manifest, "Manifest to check")->required();
    val->add_option("--disjoint-from", val_disjoint, "Manifests whose seeds must not overlap");
    val->add_flag("--no-probe", val_no_probe, "Skip decoding videos");
    val->add_flag("--no-replay", val_no_replay, "Skip re-simulation");
    val->add_flag("--json", val_json, "Print the full report as JSON");

    // stats
    auto* st = app.add_subcommand("stats", "Summarize a manifest");
    std::string st_manifest;
    st->add_option("manifest", st_manifest, "Manifest")->required()->check(CLI::ExistingFile);

    // score
    auto* sc = app.add_subcommand("score", "Score predictions against a manifest");
    std::string sc_pred, sc_manifest;
    sc->add_option("predictions", sc_pred, "Predictions file (JSONL or JSON object)")->required()->check(CLI::ExistingFile);
    sc->add_option("manifest", sc_manifest, "Manifest")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            auto cfg_json = Json::parse(std::ifstream(gen_config));
            if (gen_seed_base) cfg_json["seed_base"] = *gen_seed_base;
            if (gen_workers) cfg_json["workers"] = *gen_workers;
            if (!gen_purpose.empty()) cfg_json["purpose"] = gen_purpose;
            if (!gen_difficulty.empty()) cfg_json["difficulty"] = gen_difficulty;
            if (gen_images) cfg_json["encoder"]["image_sequence"] = true;
            if (gen_fallback) cfg_json["encoder"]["fallback_to_images"] = true;
            const auto cfg = cli::config_from_json(cfg_json);
            const auto summary = cli::cmd_generate(cfg, gen_out, gen_quiet ? nullptr : &std::cerr);
            std::cout << cli::summary_to_json(summary).dump(2) << "\n";
            for (const auto& f : summary.failures)
                std::cerr << "failed: seed " << f.seed << " (" << f.target << "): " << f.error << "\n";
            return summary.ok() ? 0 : 1;
        }
        if (*aug) {
            auto cfg = aug_config.empty() ? cli::CotConfig{} : cli::load_cot_config(aug_config);
            if (aug_iters) cfg.pipeline.max_iters = *aug_iters;
            if (aug_conc) cfg.pipeline.concurrency = *aug_conc;
            const auto res = cli::cmd_augment_cot(aug_manifest, cfg, aug_out, &std::cerr);
            auto j = cot::stats_to_json(res.stats);
            j["skipped"] = res.skipped;
            j["processed"] = res.processed;
            std::cout << j.dump(2) << "\n";
            return res.stats.backend_errors == 0 ? 0 : 1;
        }
        if (*val) {
            cli::ValidateOptions opts;
            opts.probe_videos = !val_no_probe;
            opts.replay = !val_no_replay;
            for (const auto& p : val_disjoint) opts.disjoint_from.emplace_back(p);
            const auto rep = cli::cmd_validate(val_manifest, opts);
            if (val_json) {
                std::cout << cli::report_to_json(rep).dump(2) << "\n";
            } else {
                for (const auto& v : rep.violations)
                    std::cout << v.sample_id << "\t" << v.rule << "\t" << v.detail << "\n";
                std::cout << rep.records << " records, " << rep.violations.size() << " violations\n";
            }
            return rep.clean() ? 0 : 1;
        }
        if (*st) {
            std::cout << cli::cmd_stats(st_manifest).dump(2) << "\n";
            return 0;
        }
        if (*sc) {
            std::cout << cli::cmd_score(sc_pred, sc_manifest).dump(2) << "\n";
            return 0;
        }
    } catch (const Json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const primvid::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
