#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

#include "qns/campaign.hpp"
#include "qns/io.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Multi-level spin-locking noise spectroscopy toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int workers = 0;
    std::uint64_t seed_offset = 0;

    auto* run = app.add_subcommand("run", "Run a relaxometry campaign from a JSON config");
    run->add_option("config", config_path, "campaign config (JSON)")->required();
    run->add_option("--out", out_dir, "output directory override");
    run->add_option("--workers", workers, "realization worker pool size");
    run->add_option("--seed-offset", seed_offset, "offset added to the config seed");

    std::string table_sub;
    auto* tab = app.add_subcommand("tabulate", "Emit rabi/participation/pumpprobe curve tables");
    tab->add_option("subcommand", table_sub, "rabi | participation | pumpprobe")->required();
    tab->add_option("config", config_path, "campaign config (JSON)")->required();
    tab->add_option("--out", out_dir, "output directory override");

    auto* lv = app.add_subcommand("levels", "Print the solved level structure as JSON");
    lv->add_option("config", config_path, "campaign config (JSON)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            qns::CampaignConfig config = qns::CampaignConfig::from_file(config_path);
            if (workers > 0) config.workers = workers;
            const qns::CampaignResult result = qns::run_campaign(config, out_dir, seed_offset);
            int failed = 0;
            for (const auto& p : result.points) {
                if (p.status != "ok") {
                    ++failed;
                    std::fprintf(stderr, "point %s/%zu failed: %s\n",
                                 ("sl" + std::to_string(p.target - 1) + std::to_string(p.target)).c_str(),
                                 p.index, p.status.c_str());
                }
            }
            std::printf("campaign complete: %zu files in %s (%d point failures)\n",
                        result.files.size(), result.output_dir.c_str(), failed);
            return failed == 0 ? 0 : 1;
        }
        if (tab->parsed()) {
            const qns::CampaignConfig config = qns::CampaignConfig::from_file(config_path);
            const auto files = qns::tabulate(table_sub, config, out_dir);
            for (const auto& f : files) std::printf("%s\n", f.c_str());
            return 0;
        }
        if (lv->parsed()) {
            const qns::CampaignConfig config = qns::CampaignConfig::from_file(config_path);
            const qns::LevelStructure levels = qns::solve_levels(config.sensor);
            std::fputs(qns::level_structure_json(levels).c_str(), stdout);
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
