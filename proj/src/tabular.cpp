#include "earlyrisk/tabular.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

#include "earlyrisk/rng.hpp"

namespace earlyrisk::tabular {
namespace {

std::string_view trim(std::string_view s) {
    const auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    while (!s.empty() && is_space(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && is_space(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        const auto cell = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        cells.emplace_back(trim(cell));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return cells;
}

double parse_real(std::string_view text, bool& ok) {
    double value = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    if (!text.empty() && *first == '+') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, value);
    ok = ec == std::errc() && ptr == last && first != last;
    return value;
}

std::string kind_name(ColumnKind kind) {
    switch (kind) {
        case ColumnKind::yes_no:
            return "yes_no";
        case ColumnKind::gender:
            return "gender";
        case ColumnKind::continuous:
            return "continuous";
    }
    return "?";
}

ColumnKind kind_from_name(std::string_view name) {
    if (name == "yes_no") {
        return ColumnKind::yes_no;
    }
    if (name == "gender") {
        return ColumnKind::gender;
    }
    if (name == "continuous") {
        return ColumnKind::continuous;
    }
    throw Error("encoded file: unknown column kind '" + std::string(name) + "'");
}

}  // namespace

std::size_t RawTable::column_index(std::string_view name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
        throw Error("table has no column named '" + std::string(name) + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
}

RawTable parse_csv(std::string_view text) {
    RawTable table;
    bool have_header = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string_view::npos) {
            eol = text.size();
        }
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) {
            line.remove_prefix(3);
        }
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (trim(line).empty()) {
            if (pos > text.size()) {
                break;
            }
            continue;
        }
        auto cells = split_line(line);
        if (!have_header) {
            table.header = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw Error("ragged row " + std::to_string(table.rows.size() + 1) + " (line " + std::to_string(line_no) +
                        "): " + std::to_string(cells.size()) + " cells, header has " +
                        std::to_string(table.header.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    if (!have_header) {
        throw Error("empty CSV: no header line");
    }
    return table;
}

RawTable load_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open data file '" + path.string() + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_csv(buffer.str());
}

EncodingSchema EncodingSchema::for_header(const std::vector<std::string>& header) {
    EncodingSchema schema;
    for (const auto& name : header) {
        const auto key = lower(name);
        if (key == "class") {
            schema.target_column = name;
        } else if (key == "gender") {
            schema.gender_column = name;
        } else if (key == "age") {
            schema.continuous.insert(name);
        } else {
            schema.binary_yes_no.insert(name);
        }
    }
    return schema;
}

std::size_t EncodedDataset::feature_index(std::string_view name) const {
    const auto it = std::find(feature_names.begin(), feature_names.end(), name);
    if (it == feature_names.end()) {
        throw Error("dataset has no feature named '" + std::string(name) + "'");
    }
    return static_cast<std::size_t>(it - feature_names.begin());
}

std::size_t EncodedDataset::positives() const {
    return static_cast<std::size_t>(std::count(target.begin(), target.end(), 1));
}

EncodedDataset EncodedDataset::subset(std::span<const std::size_t> rows) const {
    EncodedDataset out;
    out.features = features.select_rows(rows);
    out.target.reserve(rows.size());
    for (auto r : rows) {
        out.target.push_back(target[r]);
    }
    out.feature_names = feature_names;
    out.kinds = kinds;
    out.norm_params = norm_params;
    return out;
}

EncodedDataset EncodedDataset::select_features(const std::vector<std::string>& names) const {
    std::vector<std::size_t> cols;
    cols.reserve(names.size());
    for (const auto& n : names) {
        cols.push_back(feature_index(n));
    }
    EncodedDataset out;
    out.features = features.select_cols(cols);
    out.target = target;
    out.feature_names = names;
    for (auto c : cols) {
        out.kinds.push_back(kinds[c]);
        if (auto it = norm_params.find(feature_names[c]); it != norm_params.end()) {
            out.norm_params.insert(*it);
        }
    }
    return out;
}

void EncodedDataset::require_two_classes(std::string_view who) const {
    const auto pos = positives();
    if (pos == 0 || pos == size()) {
        throw Error(std::string(who) + ": training data must contain both classes");
    }
}

EncodedDataset encode(const RawTable& raw, const EncodingSchema& schema) {
    // The four groups must partition the header.
    std::set<std::string> seen;
    for (const auto& name : raw.header) {
        const int groups = static_cast<int>(schema.binary_yes_no.count(name)) + (name == schema.gender_column ? 1 : 0) +
                           (name == schema.target_column ? 1 : 0) + static_cast<int>(schema.continuous.count(name));
        if (groups != 1) {
            throw Error("encoding schema: column '" + name + "' belongs to " + std::to_string(groups) +
                        " groups, expected exactly one");
        }
        seen.insert(name);
    }
    auto check_known = [&](const std::string& name) {
        if (!name.empty() && !seen.count(name)) {
            throw Error("encoding schema: column '" + name + "' is not in the table header");
        }
    };
    for (const auto& n : schema.binary_yes_no) check_known(n);
    for (const auto& n : schema.continuous) check_known(n);
    check_known(schema.gender_column);
    if (!seen.count(schema.target_column)) {
        throw Error("table has no target column '" + schema.target_column + "'");
    }

    const std::size_t n = raw.rows.size();
    const std::size_t target_col = raw.column_index(schema.target_column);

    EncodedDataset ds;
    std::vector<std::size_t> source_cols;
    for (std::size_t c = 0; c < raw.header.size(); ++c) {
        if (c == target_col) {
            continue;
        }
        const auto& name = raw.header[c];
        source_cols.push_back(c);
        ds.feature_names.push_back(name);
        if (schema.continuous.count(name)) {
            ds.kinds.push_back(ColumnKind::continuous);
        } else if (name == schema.gender_column) {
            ds.kinds.push_back(ColumnKind::gender);
        } else {
            ds.kinds.push_back(ColumnKind::yes_no);
        }
    }

    auto token_error = [&](std::size_t col, std::size_t row, const std::string& token) {
        return Error("unknown token '" + token + "' in column '" + raw.header[col] + "', row " + std::to_string(row + 1));
    };

    ds.features = Matrix(n, source_cols.size());
    ds.target.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto& cells = raw.rows[r];
        const auto t = lower(cells[target_col]);
        if (t == "positive") {
            ds.target[r] = 1;
        } else if (t == "negative") {
            ds.target[r] = 0;
        } else {
            throw token_error(target_col, r, cells[target_col]);
        }
        for (std::size_t j = 0; j < source_cols.size(); ++j) {
            const auto c = source_cols[j];
            const auto token = lower(trim(cells[c]));
            switch (ds.kinds[j]) {
                case ColumnKind::yes_no:
                    if (token == "yes") {
                        ds.features(r, j) = 1.0;
                    } else if (token == "no") {
                        ds.features(r, j) = 0.0;
                    } else {
                        throw token_error(c, r, cells[c]);
                    }
                    break;
                case ColumnKind::gender:
                    if (token == "male") {
                        ds.features(r, j) = 1.0;
                    } else if (token == "female") {
                        ds.features(r, j) = 0.0;
                    } else {
                        throw token_error(c, r, cells[c]);
                    }
                    break;
                case ColumnKind::continuous: {
                    bool ok = false;
                    const double v = parse_real(trim(cells[c]), ok);
                    if (!ok || !std::isfinite(v)) {
                        throw token_error(c, r, cells[c]);
                    }
                    ds.features(r, j) = v;
                    break;
                }
            }
        }
    }

    for (std::size_t j = 0; j < source_cols.size(); ++j) {
        if (ds.kinds[j] != ColumnKind::continuous || n == 0) {
            continue;
        }
        const auto col = ds.features.column(j);
        const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
        if (*hi == *lo) {
            throw Error("continuous column '" + ds.feature_names[j] + "' is constant (min = max = " +
                        format_roundtrip(*lo) + "); cannot normalize");
        }
        ds.norm_params[ds.feature_names[j]] = {*lo, *hi};
        const double span = *hi - *lo;
        for (std::size_t r = 0; r < n; ++r) {
            ds.features(r, j) = (ds.features(r, j) - *lo) / span;
        }
    }
    return ds;
}

std::string decode_yes_no(double cell) {
    if (cell == 1.0) {
        return "Yes";
    }
    if (cell == 0.0) {
        return "No";
    }
    throw Error("decode_yes_no: cell " + format_roundtrip(cell) + " is not binary");
}

void save_encoded(const EncodedDataset& ds, const std::filesystem::path& csv_path) {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) {
        throw Error("cannot write '" + csv_path.string() + "'");
    }
    out << "# earlyrisk-encoded v1\n# kinds:";
    for (std::size_t j = 0; j < ds.kinds.size(); ++j) {
        out << (j ? "," : "") << kind_name(ds.kinds[j]);
    }
    out << "\n# norm:";
    bool first = true;
    for (const auto& [name, np] : ds.norm_params) {
        out << (first ? "" : ",") << name << '=' << format_roundtrip(np.min) << ':' << format_roundtrip(np.max);
        first = false;
    }
    out << '\n';
    for (const auto& name : ds.feature_names) {
        out << name << ',';
    }
    out << "class\n";
    for (std::size_t r = 0; r < ds.size(); ++r) {
        for (std::size_t j = 0; j < ds.feature_count(); ++j) {
            out << format_roundtrip(ds.features(r, j)) << ',';
        }
        out << ds.target[r] << '\n';
    }
}

EncodedDataset load_encoded(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path, std::ios::binary);
    if (!in) {
        throw Error("cannot open encoded dataset '" + csv_path.string() + "'");
    }
    std::string magic;
    std::string kinds_line;
    std::string norm_line;
    std::getline(in, magic);
    std::getline(in, kinds_line);
    std::getline(in, norm_line);
    if (magic != "# earlyrisk-encoded v1" || !kinds_line.starts_with("# kinds:") || !norm_line.starts_with("# norm:")) {
        throw Error("'" + csv_path.string() + "' is not an encoded dataset (bad preamble)");
    }
    std::ostringstream rest;
    rest << in.rdbuf();
    const RawTable table = parse_csv(rest.str());

    EncodedDataset ds;
    ds.feature_names.assign(table.header.begin(), table.header.end() - 1);
    for (const auto& k : split_line(std::string_view(kinds_line).substr(8))) {
        ds.kinds.push_back(kind_from_name(k));
    }
    if (ds.kinds.size() != ds.feature_names.size()) {
        throw Error("encoded dataset: kinds line does not match header");
    }
    const std::string_view norm = std::string_view(norm_line).substr(7);
    if (!trim(norm).empty()) {
        for (const auto& entry : split_line(norm)) {
            const auto eq = entry.rfind('=');
            const auto colon = entry.rfind(':');
            bool ok1 = false;
            bool ok2 = false;
            const double lo = parse_real(std::string_view(entry).substr(eq + 1, colon - eq - 1), ok1);
            const double hi = parse_real(std::string_view(entry).substr(colon + 1), ok2);
            if (eq == std::string::npos || colon == std::string::npos || !ok1 || !ok2) {
                throw Error("encoded dataset: bad norm entry '" + entry + "'");
            }
            ds.norm_params[entry.substr(0, eq)] = {lo, hi};
        }
    }
    const std::size_t p = ds.feature_names.size();
    ds.features = Matrix(table.rows.size(), p);
    ds.target.resize(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        for (std::size_t j = 0; j <= p; ++j) {
            bool ok = false;
            const double v = parse_real(table.rows[r][j], ok);
            if (!ok) {
                throw Error("encoded dataset: bad number at row " + std::to_string(r + 1));
            }
            if (j < p) {
                ds.features(r, j) = v;
            } else {
                ds.target[r] = static_cast<int>(v);
            }
        }
    }
    return ds;
}

SplitPlan train_test_split(std::size_t n, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw Error("train_test_split: ratio must lie in (0, 1), got " + format_roundtrip(ratio));
    }
    Rng rng(seed);
    const auto perm = permutation(n, rng);
    const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n)));
    SplitPlan plan;
    plan.seed = seed;
    plan.train_indices.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    plan.test_indices.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
    return plan;
}

std::vector<std::size_t> FoldPlan::training_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        if (f != fold) {
            out.insert(out.end(), folds[f].begin(), folds[f].end());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

FoldPlan kfold(std::span<const int> labels, std::size_t k, bool stratified, std::uint64_t seed) {
    const std::size_t n = labels.size();
    if (k < 2 || k > n) {
        throw Error("kfold: k must satisfy 2 <= k <= n (k = " + std::to_string(k) + ", n = " + std::to_string(n) + ")");
    }
    Rng rng(seed);
    std::vector<std::size_t> order;
    if (stratified) {
        // Shuffled positives followed by shuffled negatives, dealt round-robin:
        // both the fold sizes and the per-fold positive counts stay within one.
        std::vector<std::size_t> pos;
        std::vector<std::size_t> neg;
        for (std::size_t i = 0; i < n; ++i) {
            (labels[i] == 1 ? pos : neg).push_back(i);
        }
        rng.shuffle(pos);
        rng.shuffle(neg);
        order = std::move(pos);
        order.insert(order.end(), neg.begin(), neg.end());
    } else {
        order = permutation(n, rng);
    }
    FoldPlan plan;
    plan.k = k;
    plan.stratified = stratified;
    plan.seed = seed;
    plan.folds.resize(k);
    for (std::size_t i = 0; i < n; ++i) {
        plan.folds[i % k].push_back(order[i]);
    }
    for (auto& f : plan.folds) {
        std::sort(f.begin(), f.end());
    }
    return plan;
}

}  // namespace earlyrisk::tabular
