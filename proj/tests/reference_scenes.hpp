#pragma once

#include <string>
#include <vector>

#include "primvid/cli.hpp"

namespace reference {

struct Scene {
    std::string name;
    primvid::cli::Job job;
};

inline std::vector<Scene> scenes() {
    using namespace primvid;
    return {
        {"collision_counting_42", {0, 42, TaskType::collision_counting, {}, {}}},
        {"event_ordering_7", {0, 7, TaskType::event_ordering, {}, {}}},
        {"shell_game_forward_42", {0, 42, std::nullopt, Family::shell_game, QuestionMode::forward_prediction}},
        {"sliding_puzzle_retro_42", {0, 42, std::nullopt, Family::sliding_puzzle, QuestionMode::retrodictive_inference}},
        {"chip_containers_hist_42", {0, 42, std::nullopt, Family::chip_containers, QuestionMode::historical_query}},
    };
}

struct Hashes {
    std::string first_frame;
    std::string all_frames;
};

inline Hashes hash_scene(const Scene& s, const primvid::TemplateStore& templates) {
    using namespace primvid;
    const cli::GenerateConfig cfg;
    const auto b = cli::build_sample(s.job, cfg, templates);
    std::uint64_t all = 0xcbf29ce484222325ULL;
    std::string first;
    for (int f = 0; f < b.plan.frame_count(); ++f) {
        const auto img = render::rasterize_frame(b.plan, f, cfg.render);
        if (f == 0) first = render::hex64(render::fnv1a64(img.rgb));
        all = render::fnv1a64(img.rgb, all);
    }
    return {first, render::hex64(all)};
}

}  // namespace reference
