#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "doctest.h"

#include "perspface/error.hpp"
#include "perspface/geometry.hpp"

namespace test {

// Fresh directory under the system temp dir, removed on scope exit.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("perspface_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline perspface::Mat3 random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    const perspface::Vec3 axis(n(rng), n(rng), n(rng));
    std::uniform_real_distribution<double> angle(-3.0, 3.0);
    return perspface::axis_angle_to_rotation(axis.normalized() * angle(rng));
}

template <typename F>
perspface::ErrorCode error_code_of(F&& f) {
    try {
        f();
    } catch (const perspface::Error& e) {
        return e.code();
    }
    FAIL("expected a perspface::Error");
    return perspface::ErrorCode::IoError;
}

}  // namespace test

#define CHECK_ERROR(expr, error_code) CHECK(test::error_code_of([&] { (void)(expr); }) == (error_code))
