#include "ksparse/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ksparse {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream stream(line);
    while (std::getline(stream, field, ',')) {
        // trim surrounding whitespace
        const auto first = field.find_first_not_of(" \t\r");
        const auto last = field.find_last_not_of(" \t\r");
        fields.push_back(first == std::string::npos ? std::string()
                                                    : field.substr(first, last - first + 1));
    }
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_cell(const std::string& text, std::size_t row, std::size_t col) {
    const char* begin = text.data();
    const char* end = begin + text.size();
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw NonNumericCell("non-numeric cell '" + text + "' at row " + std::to_string(row) +
                                 ", column " + std::to_string(col),
                             row, col);
    return value;
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

LoadedInstance load_instance(const std::filesystem::path& path, const std::string& response_col,
                             bool standardize, bool scale) {
    std::ifstream file(path);
    if (!file) throw ParseError("cannot open '" + path.string() + "'");

    std::string line;
    if (!std::getline(file, line)) throw EmptyData("'" + path.string() + "' is empty");
    const std::vector<std::string> header = split_csv_line(line);
    if (header.size() < 2)
        throw ParseError("need a response column and at least one regressor column");

    // Response column: by header name, or by 0-based position if the
    // argument parses as an integer and no header matches it.
    std::size_t response_idx = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == response_col) response_idx = i;
    if (response_idx == header.size()) {
        int pos = -1;
        const auto [ptr, ec] =
            std::from_chars(response_col.data(), response_col.data() + response_col.size(), pos);
        if (ec == std::errc() && ptr == response_col.data() + response_col.size() && pos >= 0 &&
            static_cast<std::size_t>(pos) < header.size())
            response_idx = static_cast<std::size_t>(pos);
    }
    if (response_idx == header.size())
        throw ParseError("response column '" + response_col + "' not found in header");

    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(file, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw ParseError("row " + std::to_string(line_no) + " has " +
                                 std::to_string(fields.size()) + " fields, expected " +
                                 std::to_string(header.size()),
                             line_no);
        std::vector<double> values(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c)
            values[c] = parse_cell(fields[c], line_no, c + 1);
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw EmptyData("'" + path.string() + "' has no data rows");

    const auto m = static_cast<Eigen::Index>(rows.size());
    const auto n = static_cast<Eigen::Index>(header.size() - 1);
    Eigen::MatrixXd a(m, n);
    Eigen::VectorXd y(m);
    LoadedInstance loaded;
    loaded.response_name = header[response_idx];
    for (std::size_t c = 0; c < header.size(); ++c)
        if (c != response_idx) loaded.column_names.push_back(header[c]);
    for (Eigen::Index r = 0; r < m; ++r) {
        Eigen::Index col = 0;
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (c == static_cast<std::size_t>(response_idx))
                y(r) = rows[static_cast<std::size_t>(r)][c];
            else
                a(r, col++) = rows[static_cast<std::size_t>(r)][c];
        }
    }

    if (standardize) {
        y.array() -= y.mean();
        for (Eigen::Index c = 0; c < n; ++c) a.col(c).array() -= a.col(c).mean();
        loaded.standardized = true;
    }
    if (scale && m > 1) {
        for (Eigen::Index c = 0; c < n; ++c) {
            const double mean = a.col(c).mean();
            const double sd =
                std::sqrt((a.col(c).array() - mean).square().sum() / static_cast<double>(m - 1));
            if (sd > 1e-300) a.col(c) /= sd;
        }
        loaded.scaled = true;
    }

    loaded.instance = Instance(std::move(a), std::move(y));
    return loaded;
}

void write_instance_csv(const std::filesystem::path& path, const Instance& instance,
                        const std::vector<std::string>& column_names,
                        const std::string& response_name) {
    if (static_cast<int>(column_names.size()) != instance.n())
        throw DimensionMismatch("column name count does not match n");
    std::string out;
    out += response_name;
    for (const auto& name : column_names) {
        out += ',';
        out += name;
    }
    out += '\n';
    for (int r = 0; r < instance.m(); ++r) {
        out += format_double(instance.y(r));
        for (int c = 0; c < instance.n(); ++c) {
            out += ',';
            out += format_double(instance.a(r, c));
        }
        out += '\n';
    }
    write_text_file(path, out);
}

json support_to_json(const Support& support) { return json(support.indices()); }

json sa_result_to_json(const SaResult& result) {
    json trace = json::array();
    for (const auto& [beta, eps] : result.trace)
        trace.push_back(json{{"beta", beta}, {"eps", eps}});
    return json{{"best_support", support_to_json(result.best_support)},
                {"best_rss", result.best_rss},
                {"final_support", support_to_json(result.final_support)},
                {"final_rss", result.final_rss},
                {"accepted", result.accepted},
                {"proposed", result.proposed},
                {"trace", std::move(trace)}};
}

json cv_report_to_json(const CvReport& report) {
    json looe = json::object();
    json supports = json::object();
    json frequencies = json::object();
    json seeds = json::object();
    json failed = json::object();
    for (int k : report.k_values) {
        const std::string key = std::to_string(k);
        looe[key] = report.looe.at(k);
        json fold_list = json::array();
        json seed_list = json::array();
        for (const auto& cell : report.cells.at(k)) {
            seed_list.push_back(cell.seed);
            if (cell.ok)
                fold_list.push_back(support_to_json(cell.support));
            else
                fold_list.push_back(json{{"failed", cell.error}});
        }
        supports[key] = std::move(fold_list);
        seeds[key] = std::move(seed_list);
        json freq = json::object();
        for (const auto& [col, count] : report.frequencies.at(k))
            freq[std::to_string(col)] = count;
        frequencies[key] = std::move(freq);
        if (auto it = report.failed_folds.find(k); it != report.failed_folds.end())
            failed[key] = it->second;
    }
    return json{{"k_values", report.k_values},
                {"looe", std::move(looe)},
                {"best_k", report.best_k},
                {"per_fold_supports", std::move(supports)},
                {"frequencies", std::move(frequencies)},
                {"fold_seeds", std::move(seeds)},
                {"failed_folds", std::move(failed)}};
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream file(path, std::ios::binary);
    if (!file) throw Error("cannot write '" + path.string() + "'");
    file << contents;
    if (!file) throw Error("write failed for '" + path.string() + "'");
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
    write_text_file(path, doc.dump(2) + "\n");
}

}  // namespace ksparse
