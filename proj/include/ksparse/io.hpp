// Instance CSV loading/writing and JSON serialization of reports.
//
// Instance files are plain CSV with a header row: one response column
// (named "y" by default, selectable by name or 0-based position) and the
// remaining numeric columns forming the design matrix in file order.
// Values are written with 17 significant digits so a load(write(x)) round
// trip is exact.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ksparse/cv.hpp"
#include "ksparse/sampler.hpp"
#include "ksparse/synthetic.hpp"
#include "ksparse/types.hpp"

#include <json.hpp>

namespace ksparse {

using json = nlohmann::json;

struct LoadedInstance {
    Instance instance;
    std::vector<std::string> column_names;  // regressors, in matrix column order
    std::string response_name;
    bool standardized = false;
    bool scaled = false;
};

// standardize: subtract column means from y and every column of A.
// scale: additionally divide each centered column by its sample standard
// deviation (columns with zero variance are left unscaled).
LoadedInstance load_instance(const std::filesystem::path& path, const std::string& response_col,
                             bool standardize, bool scale = false);

void write_instance_csv(const std::filesystem::path& path, const Instance& instance,
                        const std::vector<std::string>& column_names,
                        const std::string& response_name);

std::string format_double(double value);  // shortest exact decimal form

json support_to_json(const Support& support);
json sa_result_to_json(const SaResult& result);
json cv_report_to_json(const CvReport& report);

void write_text_file(const std::filesystem::path& path, const std::string& contents);
void write_json_file(const std::filesystem::path& path, const json& doc);

}  // namespace ksparse
