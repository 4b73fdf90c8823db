#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "earlyrisk/common.hpp"
#include "earlyrisk/rng.hpp"
#include "earlyrisk/tabular.hpp"

namespace fixtures {

/// Column order of the early-stage diabetes CSV.
inline const std::vector<std::string>& uci_header() {
    static const std::vector<std::string> header{
        "Age",           "Gender",          "Polyuria",       "Polydipsia",      "sudden weight loss", "weakness",
        "Polyphagia",    "Genital thrush",  "visual blurring", "Itching",        "Irritability",       "delayed healing",
        "partial paresis", "muscle stiffness", "Alopecia",     "Obesity",         "class"};
    return header;
}

/// Raw CSV text with the UCI header whose symptom rates depend on the class. Not the
/// real data: used where the pipeline needs realistic-looking input.
std::string synthetic_uci_csv(std::size_t rows, std::uint64_t seed);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Dataset built directly from a matrix and labels, features named f0, f1, ...
earlyrisk::tabular::EncodedDataset make_dataset(const earlyrisk::Matrix& x, std::vector<int> y);

earlyrisk::Matrix matrix(std::initializer_list<std::initializer_list<double>> rows);

/// Message of the earlyrisk::Error thrown by `fn`, or "" if nothing was thrown.
std::string error_of(const std::function<void()>& fn);

}  // namespace fixtures
