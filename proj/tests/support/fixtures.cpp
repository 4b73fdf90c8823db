#include "fixtures.hpp"

#include <fstream>
#include <sstream>

namespace fixtures {

std::string synthetic_uci_csv(std::size_t rows, std::uint64_t seed) {
    // P(Yes | positive), P(Yes | negative) per symptom column.
    static const std::vector<std::pair<double, double>> rates{
        {0.76, 0.08}, {0.70, 0.04}, {0.59, 0.14}, {0.68, 0.43}, {0.59, 0.24}, {0.26, 0.14}, {0.55, 0.29},
        {0.48, 0.50}, {0.34, 0.08}, {0.48, 0.43}, {0.60, 0.16}, {0.42, 0.30}, {0.24, 0.50}, {0.19, 0.14}};
    earlyrisk::Rng rng(seed);
    std::ostringstream out;
    const auto& header = uci_header();
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (std::size_t r = 0; r < rows; ++r) {
        const bool positive = rng.uniform() < 0.615;
        out << 25 + rng.below(56) + (positive ? 5 : 0) << ',';
        out << (rng.uniform() < (positive ? 0.54 : 0.1) ? "Female" : "Male");
        for (const auto& [pos, neg] : rates) out << ',' << (rng.uniform() < (positive ? pos : neg) ? "Yes" : "No");
        out << ',' << (positive ? "Positive" : "Negative") << '\n';
    }
    return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw earlyrisk::Error("cannot write '" + path.string() + "'");
    out << text;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw earlyrisk::Error("cannot read '" + path.string() + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

TempDir::TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    const auto base = std::filesystem::temp_directory_path();
    earlyrisk::Rng rng(reinterpret_cast<std::uintptr_t>(this) ^ ++counter);
    do {
        path_ = base / ("earlyrisk-" + tag + "-" + std::to_string(rng.next_u64() % 1000000000ULL));
    } while (std::filesystem::exists(path_));
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

earlyrisk::tabular::EncodedDataset make_dataset(const earlyrisk::Matrix& x, std::vector<int> y) {
    earlyrisk::tabular::EncodedDataset ds;
    ds.features = x;
    ds.target = std::move(y);
    for (std::size_t j = 0; j < x.cols(); ++j) {
        ds.feature_names.push_back("f" + std::to_string(j));
        ds.kinds.push_back(earlyrisk::tabular::ColumnKind::yes_no);
    }
    return ds;
}

earlyrisk::Matrix matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t cols = rows.size() ? rows.begin()->size() : 0;
    std::vector<double> values;
    for (const auto& r : rows) values.insert(values.end(), r.begin(), r.end());
    return earlyrisk::Matrix(rows.size(), cols, std::move(values));
}

std::string error_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const earlyrisk::Error& e) {
        return e.what();
    }
    return "";
}

}  // namespace fixtures
