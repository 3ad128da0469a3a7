// Scratch directories and small scenario builders for tests.
#pragma once

#include "amod/demand.hpp"
#include "amod/text.hpp"

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>

#ifndef AMOD_SOURCE_DIR
#define AMOD_SOURCE_DIR "."
#endif

namespace amod::testing {

namespace fs = std::filesystem;

inline fs::path source_dir() { return fs::path(AMOD_SOURCE_DIR); }
inline fs::path golden_dir() { return source_dir() / "data" / "golden"; }

/// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("amod-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    const fs::path& path() const noexcept { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

    fs::path write(const std::string& name, const std::string& content) const {
        text::write_file(path_ / name, content);
        return path_ / name;
    }

private:
    fs::path path_;
};

}  // namespace amod::testing
