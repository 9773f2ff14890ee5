#ifndef PSF_TESTS_TESTUTIL_HPP
#define PSF_TESTS_TESTUTIL_HPP

#include <filesystem>
#include <fstream>
#include <string>

#include "psf/image.hpp"
#include "psf/rng.hpp"

namespace psf::test {

// Unique scratch directory under the build tree, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("psf-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline imaging::ImageBuffer random_image(int h, int w, int channels, std::uint64_t seed) {
    Rng rng(seed);
    imaging::ImageBuffer img(h, w, channels);
    for (auto& b : img.data)
        b = static_cast<std::uint8_t>(rng.uniform_below(256));
    return img;
}

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace psf::test

#endif
