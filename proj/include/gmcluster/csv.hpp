#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gmcluster/assignment.hpp"
#include "gmcluster/data_core.hpp"
#include "gmcluster/error.hpp"

namespace gmcluster {

struct CsvOptions {
    char delimiter = ',';
};

/// Objects-by-features table read from disk.
struct Dataset {
    Matrix values;
    std::vector<std::string> object_ids;
    std::vector<std::string> feature_names;
    std::optional<std::vector<std::string>> labels; // from a column named "label"
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

inline std::vector<std::string> split_fields(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(delim, start);
        out.emplace_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? pos : pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::optional<double> parse_number(std::string_view s) {
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double value = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, value);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    return value;
}

inline std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline Error parse_error(std::size_t line_no, const std::string& what) {
    return Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + what);
}

inline bool is_blank(const std::string& line) {
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

} // namespace detail

/// Rows are objects, columns are features. The first row is a header when any
/// of its fields is non-numeric. Header columns named "label" (ground truth)
/// and "id" / "object_id" (identifiers) are split off; every other column must
/// be numeric. Without an id column, objects are numbered from 1.
inline Dataset read_dataset(std::istream& in, const CsvOptions& opt = {}) {
    Dataset ds;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    std::optional<std::size_t> label_col, id_col;
    std::vector<std::size_t> feature_cols;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> labels;
    bool have_layout = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::is_blank(line)) continue;
        auto fields = detail::split_fields(line, opt.delimiter);

        if (!have_layout) {
            have_layout = true;
            width = fields.size();
            const bool header = std::any_of(fields.begin(), fields.end(),
                                            [](const std::string& f) { return !detail::parse_number(f); });
            for (std::size_t c = 0; c < width; ++c) {
                const std::string name = header ? detail::lower(fields[c]) : std::string();
                if (header && name == "label") {
                    if (label_col) throw detail::parse_error(line_no, "duplicate label column");
                    label_col = c;
                } else if (header && (name == "id" || name == "object_id")) {
                    if (id_col) throw detail::parse_error(line_no, "duplicate id column");
                    id_col = c;
                } else {
                    feature_cols.push_back(c);
                    ds.feature_names.push_back(header ? fields[c] : "f" + std::to_string(c + 1));
                }
            }
            if (feature_cols.empty()) throw detail::parse_error(line_no, "no feature columns");
            if (header) continue;
        }

        if (fields.size() != width) {
            throw detail::parse_error(line_no, "expected " + std::to_string(width) + " fields, found " +
                                                   std::to_string(fields.size()));
        }
        std::vector<double> row;
        row.reserve(feature_cols.size());
        for (std::size_t c : feature_cols) {
            const auto v = detail::parse_number(fields[c]);
            if (!v) throw detail::parse_error(line_no, "field " + std::to_string(c + 1) + " is not a number: '" +
                                                           fields[c] + "'");
            row.push_back(*v);
        }
        rows.push_back(std::move(row));
        if (label_col) labels.push_back(fields[*label_col]);
        ds.object_ids.push_back(id_col ? fields[*id_col] : std::to_string(rows.size()));
    }
    if (rows.size() < 2) throw Error(ErrorCode::ParseError, "need at least 2 data rows");

    ds.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(feature_cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < feature_cols.size(); ++j)
            ds.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    if (label_col) ds.labels = std::move(labels);
    return ds;
}

inline Dataset read_dataset(const std::string& path, const CsvOptions& opt = {}) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
    return read_dataset(in, opt);
}

/// Two-column (object id, label) file as written by write_assignments.
struct LabelFile {
    std::vector<std::string> object_ids;
    std::vector<std::string> labels;
};

inline LabelFile read_labels(std::istream& in, const CsvOptions& opt = {}) {
    LabelFile lf;
    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::is_blank(line)) continue;
        auto fields = detail::split_fields(line, opt.delimiter);
        if (fields.size() != 2) throw detail::parse_error(line_no, "expected 2 fields (object_id, label)");
        if (first) {
            first = false;
            const auto a = detail::lower(fields[0]);
            if ((a == "object_id" || a == "id") && detail::lower(fields[1]) == "label") continue;
        }
        lf.object_ids.push_back(fields[0]);
        lf.labels.push_back(fields[1]);
    }
    if (lf.labels.empty()) throw Error(ErrorCode::ParseError, "label file is empty");
    return lf;
}

inline LabelFile read_labels(const std::string& path, const CsvOptions& opt = {}) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
    return read_labels(in, opt);
}

inline void write_assignments(std::ostream& out, const std::vector<std::string>& ids, const ClusterAssignment& labels) {
    out << "object_id,label\n";
    for (std::size_t i = 0; i < labels.size(); ++i) out << ids[i] << ',' << labels[i] << '\n';
}

/// Aligns `truth` to the object order of `pred`. Throws ObjectIdMismatch
/// unless both files cover exactly the same ids.
inline std::pair<ClusterAssignment, ClusterAssignment> align_labels(const LabelFile& pred, const LabelFile& truth) {
    if (pred.object_ids.size() != truth.object_ids.size()) {
        throw Error(ErrorCode::ObjectIdMismatch, "files list different numbers of objects");
    }
    std::vector<std::pair<std::string, std::size_t>> index;
    for (std::size_t i = 0; i < truth.object_ids.size(); ++i) index.emplace_back(truth.object_ids[i], i);
    std::sort(index.begin(), index.end());
    for (std::size_t i = 1; i < index.size(); ++i) {
        if (index[i].first == index[i - 1].first) {
            throw Error(ErrorCode::ObjectIdMismatch, "duplicate object id " + index[i].first);
        }
    }
    std::vector<std::string> pred_ids = pred.object_ids;
    std::sort(pred_ids.begin(), pred_ids.end());
    if (std::adjacent_find(pred_ids.begin(), pred_ids.end()) != pred_ids.end()) {
        throw Error(ErrorCode::ObjectIdMismatch, "duplicate object id in predictions");
    }
    std::vector<std::string> aligned;
    aligned.reserve(pred.object_ids.size());
    for (const auto& id : pred.object_ids) {
        auto it = std::lower_bound(index.begin(), index.end(), std::make_pair(id, std::size_t{0}));
        if (it == index.end() || it->first != id) throw Error(ErrorCode::ObjectIdMismatch, "unknown object id " + id);
        aligned.push_back(truth.labels[it->second]);
    }
    return {assignment_from_keys<std::string>(pred.labels), assignment_from_keys<std::string>(aligned)};
}

} // namespace gmcluster
