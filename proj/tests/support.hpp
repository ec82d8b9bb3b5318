#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "volgrid.hpp"

// Shared fixtures: scratch directories and small random grids.
namespace testsup {

namespace fs = std::filesystem;

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        dir_ = fs::temp_directory_path() /
               ("spinemetry_" + tag + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter.fetch_add(1)));
        fs::create_directories(dir_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(dir_, ec);
    }
    fs::path path(const std::string& name) const { return dir_ / name; }
    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
};

inline spm::volgrid::Volume random_volume(std::mt19937& rng, std::int64_t max_dim = 8) {
    std::uniform_int_distribution<std::int64_t> dim(1, max_dim);
    std::uniform_real_distribution<double> sp(0.5, 3.0);
    std::uniform_real_distribution<double> val(-100.0, 300.0);
    spm::volgrid::Dims dims{dim(rng), dim(rng), dim(rng)};
    spm::volgrid::Vec3 spacing{sp(rng), sp(rng), sp(rng)};
    std::vector<double> data(static_cast<std::size_t>(dims[0] * dims[1] * dims[2]));
    for (double& x : data) x = val(rng);
    return spm::volgrid::Volume(dims, spacing, {0, 0, 0}, std::move(data));
}

inline spm::volgrid::LabelMap random_labelmap(std::mt19937& rng, std::int64_t max_dim = 8,
                                              std::int32_t max_label = 3) {
    std::uniform_int_distribution<std::int64_t> dim(1, max_dim);
    std::uniform_int_distribution<std::int32_t> lab(0, max_label);
    spm::volgrid::Dims dims{dim(rng), dim(rng), dim(rng)};
    std::vector<std::int32_t> data(static_cast<std::size_t>(dims[0] * dims[1] * dims[2]));
    for (auto& x : data) x = lab(rng);
    return spm::volgrid::LabelMap(dims, {1, 1, 1}, {0, 0, 0}, std::move(data));
}

}  // namespace testsup
