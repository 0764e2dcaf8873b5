#include "fbgskin/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "fbgskin/errors.hpp"
#include "fbgskin/percentile.hpp"

namespace fbgskin {

namespace fs = std::filesystem;

namespace {

std::string g6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::ofstream open_out(const fs::path& p) {
    fs::create_directories(p.parent_path());
    std::ofstream os(p, std::ios::binary);
    if (!os) throw IoError("cannot write " + p.string());
    return os;
}

// reporting order of the grid nets (slot in loc arrays, display name)
const std::array<std::pair<int, const char*>, 5> kReportOrder = {
    std::pair<int, const char*>{0, "SG-NN"}, {3, "DSG-NN"}, {2, "HSG-NN"},
    {1, "VSG-NN"}, {4, "UNION"}};

std::vector<double> column(const std::vector<FoldForceRow>& rows, int which) {
    std::vector<double> v;
    for (const auto& r : rows) {
        switch (which) {
            case 0: v.push_back(r.train.median); break;
            case 1: v.push_back(r.train.iqr); break;
            case 2: v.push_back(r.val.median); break;
            default: v.push_back(r.val.iqr); break;
        }
    }
    return v;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::ifstream is(p);
    if (!is) throw IoError("cannot open " + p.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<std::string> cells;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                cells.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        cells.push_back(cur);
        rows.push_back(std::move(cells));
    }
    return rows;
}

// ---- minimal SVG plotting ----

struct SvgCanvas {
    std::ostringstream body;
    double width = 640, height = 400;
    double ml = 70, mr = 20, mt = 20, mb = 55;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;

    double px(double x) const {
        return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr);
    }
    double py(double y) const {
        return height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb);
    }

    void axes(const std::string& xlabel, const std::string& ylabel) {
        body << "<rect x='" << ml << "' y='" << mt << "' width='" << width - ml - mr
             << "' height='" << height - mt - mb
             << "' fill='none' stroke='#888' stroke-width='1'/>\n";
        for (int i = 0; i <= 4; ++i) {
            const double fx = xmin + (xmax - xmin) * i / 4.0;
            const double fy = ymin + (ymax - ymin) * i / 4.0;
            body << "<text x='" << px(fx) << "' y='" << height - mb + 18
                 << "' font-size='11' text-anchor='middle'>" << g6(fx) << "</text>\n";
            body << "<text x='" << ml - 6 << "' y='" << py(fy) + 4
                 << "' font-size='11' text-anchor='end'>" << g6(fy) << "</text>\n";
        }
        body << "<text x='" << (ml + width - mr) / 2 << "' y='" << height - 12
             << "' font-size='13' text-anchor='middle'>" << xlabel << "</text>\n";
        body << "<text x='16' y='" << (mt + height - mb) / 2
             << "' font-size='13' text-anchor='middle' transform='rotate(-90 16 "
             << (mt + height - mb) / 2 << ")'>" << ylabel << "</text>\n";
    }

    void polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                  const std::string& color) {
        body << "<polyline fill='none' stroke='" << color << "' stroke-width='2' points='";
        for (size_t i = 0; i < xs.size(); ++i)
            body << px(xs[i]) << "," << py(ys[i]) << " ";
        body << "'/>\n";
        for (size_t i = 0; i < xs.size(); ++i)
            body << "<circle cx='" << px(xs[i]) << "' cy='" << py(ys[i])
                 << "' r='3' fill='" << color << "'/>\n";
    }

    void save(const fs::path& p) {
        auto os = open_out(p);
        os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='"
           << height << "'>\n<rect width='100%' height='100%' fill='white'/>\n"
           << body.str() << "</svg>\n";
    }
};

void line_figure(const fs::path& out, const std::vector<double>& xs,
                 const std::vector<double>& ys, const std::string& xlabel,
                 const std::string& ylabel) {
    if (xs.empty()) return;
    SvgCanvas svg;
    svg.xmin = 0.0;
    svg.xmax = *std::max_element(xs.begin(), xs.end()) * 1.05;
    svg.ymin = 0.0;
    svg.ymax = *std::max_element(ys.begin(), ys.end()) * 1.15 + 1e-12;
    svg.axes(xlabel, ylabel);
    svg.polyline(xs, ys, "#2266cc");
    svg.save(out);
}

void bar_figure(const fs::path& out, const std::vector<std::string>& labels,
                const std::vector<double>& values, const std::string& ylabel) {
    if (values.empty()) return;
    SvgCanvas svg;
    svg.xmin = 0.0;
    svg.xmax = static_cast<double>(values.size());
    svg.ymin = 0.0;
    svg.ymax = *std::max_element(values.begin(), values.end()) * 1.15 + 1e-12;
    svg.axes("", ylabel);
    for (size_t i = 0; i < values.size(); ++i) {
        const double x0 = svg.px(i + 0.15), x1 = svg.px(i + 0.85);
        const double y0 = svg.py(values[i]), y1 = svg.py(0.0);
        svg.body << "<rect x='" << x0 << "' y='" << y0 << "' width='" << x1 - x0
                 << "' height='" << y1 - y0 << "' fill='#2266cc'/>\n";
        svg.body << "<text x='" << svg.px(i + 0.5) << "' y='" << svg.height - svg.mb + 18
                 << "' font-size='12' text-anchor='middle'>" << labels[i] << "</text>\n";
        svg.body << "<text x='" << svg.px(i + 0.5) << "' y='" << y0 - 5
                 << "' font-size='11' text-anchor='middle'>" << g6(values[i])
                 << "</text>\n";
    }
    svg.save(out);
}

void write_map_csv(const SpatialMap& map, const fs::path& path) {
    auto os = open_out(path);
    os << "x_mm,y_mm,median_err,count\n";
    for (int j = 0; j < map.ny; ++j) {
        for (int i = 0; i < map.nx; ++i) {
            const double x = (i + 0.5) * map.pitch - kAreaWidth / 2.0;
            const double y = (j + 0.5) * map.pitch;
            const double v = map.median_err(j, i);
            os << g6(x) << "," << g6(y) << ","
               << (std::isnan(v) ? std::string("") : g6(v)) << ","
               << static_cast<long>(map.counts(j, i)) << "\n";
        }
    }
}

}  // namespace

void write_report_bundle(const EvalReport& report, const std::string& out_dir) {
    const fs::path base(out_dir);

    {
        auto os = open_out(base / "tables" / "force_cv.csv");
        os << "fold,train_median_mN,train_iqr_mN,val_median_mN,val_iqr_mN\n";
        for (size_t f = 0; f < report.force_cv.size(); ++f) {
            const auto& r = report.force_cv[f];
            os << f + 1 << "," << g6(r.train.median * 1e3) << "," << g6(r.train.iqr * 1e3)
               << "," << g6(r.val.median * 1e3) << "," << g6(r.val.iqr * 1e3) << "\n";
        }
        if (!report.force_cv.empty()) {
            os << "median";
            for (int c = 0; c < 4; ++c)
                os << "," << g6(median_iqr(column(report.force_cv, c)).median * 1e3);
            os << "\niqr";
            for (int c = 0; c < 4; ++c)
                os << "," << g6(median_iqr(column(report.force_cv, c)).iqr * 1e3);
            os << "\n";
        }
    }

    {
        auto os = open_out(base / "tables" / "loc_cv.csv");
        os << "fold,net,train_median_mm,train_iqr_mm,val_median_mm,val_iqr_mm\n";
        for (size_t f = 0; f < report.loc_cv.size(); ++f) {
            for (const auto& [slot, name] : kReportOrder) {
                const auto& r = report.loc_cv[f];
                os << f + 1 << "," << name << "," << g6(r.train[slot].median) << ","
                   << g6(r.train[slot].iqr) << "," << g6(r.val[slot].median) << ","
                   << g6(r.val[slot].iqr) << "\n";
            }
        }
        for (const auto& [slot, name] : kReportOrder) {
            std::vector<double> tm, ti, vm, vi;
            for (const auto& r : report.loc_cv) {
                tm.push_back(r.train[slot].median);
                ti.push_back(r.train[slot].iqr);
                vm.push_back(r.val[slot].median);
                vi.push_back(r.val[slot].iqr);
            }
            if (tm.empty()) break;
            os << "median," << name << "," << g6(median_iqr(tm).median) << ","
               << g6(median_iqr(ti).median) << "," << g6(median_iqr(vm).median) << ","
               << g6(median_iqr(vi).median) << "\n";
            os << "iqr," << name << "," << g6(median_iqr(tm).iqr) << ","
               << g6(median_iqr(ti).iqr) << "," << g6(median_iqr(vm).iqr) << ","
               << g6(median_iqr(vi).iqr) << "\n";
        }
    }

    {
        auto os = open_out(base / "tables" / "test_results.csv");
        os << "metric,value\n";
        os << "force_test_median_mN," << g6(report.force_test.median * 1e3) << "\n";
        os << "force_test_iqr_mN," << g6(report.force_test.iqr * 1e3) << "\n";
        for (const auto& [slot, name] : kReportOrder) {
            os << "loc_test_median_mm_" << name << "," << g6(report.loc_test[slot].median)
               << "\n";
            os << "loc_test_iqr_mm_" << name << "," << g6(report.loc_test[slot].iqr) << "\n";
        }
        os << "n_force_test," << report.n_force_test << "\n";
        os << "n_loc_test," << report.n_loc_test << "\n";
        os << "force_err_slope_mN_per_N," << g6(report.force_profile.slope * 1e3) << "\n";
        os << "force_err_intercept_mN," << g6(report.force_profile.intercept * 1e3) << "\n";
        os << "force_err_r2," << g6(report.force_profile.r2) << "\n";
        os << "loc_err_slope_mm_per_N," << g6(report.loc_profile.slope) << "\n";
        os << "loc_err_intercept_mm," << g6(report.loc_profile.intercept) << "\n";
        os << "loc_err_r2," << g6(report.loc_profile.r2) << "\n";
    }

    {
        auto os = open_out(base / "tables" / "baselines.csv");
        os << "metric,value\n";
        os << "rg_force_const_mN," << g6(report.rg_force_const * 1e3) << "\n";
        os << "rg_force_err_median_mN," << g6(report.rg_force_err.median * 1e3) << "\n";
        os << "rg_force_err_iqr_mN," << g6(report.rg_force_err.iqr * 1e3) << "\n";
        os << "rg_loc_const_x_mm," << g6(report.rg_loc_const.x) << "\n";
        os << "rg_loc_const_y_mm," << g6(report.rg_loc_const.y) << "\n";
        os << "rg_loc_err_median_mm," << g6(report.rg_loc_err.median) << "\n";
        os << "rg_loc_err_iqr_mm," << g6(report.rg_loc_err.iqr) << "\n";
    }

    {
        auto os = open_out(base / "tables" / "stats.csv");
        os << "test,n,w,p,exact,cohens_d\n";
        os << "force_vs_rg," << report.wilcoxon_force.n << "," << g6(report.wilcoxon_force.w)
           << "," << g6(report.wilcoxon_force.p) << ","
           << (report.wilcoxon_force.exact ? "true" : "false") << ","
           << g6(report.cohens_d_force) << "\n";
        os << "loc_vs_rg," << report.wilcoxon_loc.n << "," << g6(report.wilcoxon_loc.w)
           << "," << g6(report.wilcoxon_loc.p) << ","
           << (report.wilcoxon_loc.exact ? "true" : "false") << ","
           << g6(report.cohens_d_loc) << "\n";
    }

    {
        auto os = open_out(base / "tables" / "force_error_vs_force.csv");
        os << "bin_center_N,median_abs_err_mN,count\n";
        for (size_t i = 0; i < report.force_profile.bin_centers.size(); ++i)
            os << g6(report.force_profile.bin_centers[i]) << ","
               << g6(report.force_profile.bin_medians[i] * 1e3) << ","
               << report.force_profile.bin_counts[i] << "\n";
    }
    {
        auto os = open_out(base / "tables" / "loc_error_vs_force.csv");
        os << "bin_center_N,median_err_mm,count\n";
        for (size_t i = 0; i < report.loc_profile.bin_centers.size(); ++i)
            os << g6(report.loc_profile.bin_centers[i]) << ","
               << g6(report.loc_profile.bin_medians[i]) << ","
               << report.loc_profile.bin_counts[i] << "\n";
    }

    {
        auto os = open_out(base / "tables" / "receptive_fields.csv");
        os << "sensor,area_mm2,lobes\n";
        for (size_t s = 0; s < report.rf.areas_mm2.size(); ++s)
            os << s + 1 << "," << g6(report.rf.areas_mm2[s]) << ","
               << report.rf.lobe_counts[s] << "\n";
        os << "median," << g6(report.rf.median_area_mm2) << ",\n";
    }

    write_map_csv(report.force_map, base / "maps" / "force_error_map.csv");
    write_map_csv(report.loc_map, base / "maps" / "loc_error_map.csv");

    assemble_report(out_dir);
}

void assemble_report(const std::string& dir) {
    const fs::path base(dir);
    if (!fs::exists(base / "tables" / "test_results.csv"))
        throw std::invalid_argument("no tables/ to assemble under " + dir);

    std::map<std::string, std::string> kv;
    for (const char* name : {"test_results.csv", "baselines.csv"}) {
        for (const auto& row : read_csv(base / "tables" / name)) {
            if (row.size() == 2 && row[0] != "metric") kv[row[0]] = row[1];
        }
    }

    auto os = open_out(base / "report.txt");
    for (const auto& [k, v] : kv) os << k << "=" << v << "\n";

    // statistics vs the random-guess baselines
    for (const auto& row : read_csv(base / "tables" / "stats.csv")) {
        if (row.size() == 6 && row[0] != "test") {
            os << "wilcoxon_" << row[0] << "_n=" << row[1] << "\n";
            os << "wilcoxon_" << row[0] << "_w=" << row[2] << "\n";
            os << "wilcoxon_" << row[0] << "_p=" << row[3] << "\n";
            os << "cohens_d_" << row[0] << "=" << row[5] << "\n";
        }
    }

    // cross-validation summaries: both the fold-median and fold-IQR views
    {
        const auto rows = read_csv(base / "tables" / "force_cv.csv");
        for (const auto& row : rows) {
            if (row.size() == 5 && row[0] == "median") {
                os << "cv_force_median_of_train_medians_mN=" << row[1] << "\n";
                os << "cv_force_median_of_train_iqrs_mN=" << row[2] << "\n";
                os << "cv_force_median_of_val_medians_mN=" << row[3] << "\n";
                os << "cv_force_median_of_val_iqrs_mN=" << row[4] << "\n";
            } else if (row.size() == 5 && row[0] == "iqr") {
                os << "cv_force_iqr_of_train_medians_mN=" << row[1] << "\n";
                os << "cv_force_iqr_of_train_iqrs_mN=" << row[2] << "\n";
                os << "cv_force_iqr_of_val_medians_mN=" << row[3] << "\n";
                os << "cv_force_iqr_of_val_iqrs_mN=" << row[4] << "\n";
            }
        }
    }
    {
        const auto rows = read_csv(base / "tables" / "loc_cv.csv");
        for (const auto& row : rows) {
            if (row.size() == 6 && (row[0] == "median" || row[0] == "iqr")) {
                os << "cv_loc_" << row[0] << "_of_val_medians_mm_" << row[1] << "="
                   << row[4] << "\n";
            }
        }
    }
    {
        const auto rows = read_csv(base / "tables" / "receptive_fields.csv");
        for (const auto& row : rows) {
            if (row.size() >= 2 && row[0] == "median")
                os << "rf_median_area_mm2=" << row[1] << "\n";
        }
    }

    // figures from the tables
    {
        const auto rows = read_csv(base / "tables" / "force_error_vs_force.csv");
        std::vector<double> xs, ys;
        for (const auto& row : rows) {
            if (row.size() == 3 && row[0] != "bin_center_N") {
                xs.push_back(std::stod(row[0]));
                ys.push_back(std::stod(row[1]));
            }
        }
        line_figure(base / "figures" / "force_error_vs_force.svg", xs, ys,
                    "applied force [N]", "median |force error| [mN]");
    }
    {
        const auto rows = read_csv(base / "tables" / "loc_error_vs_force.csv");
        std::vector<double> xs, ys;
        for (const auto& row : rows) {
            if (row.size() == 3 && row[0] != "bin_center_N") {
                xs.push_back(std::stod(row[0]));
                ys.push_back(std::stod(row[1]));
            }
        }
        line_figure(base / "figures" / "loc_error_vs_force.svg", xs, ys,
                    "applied force [N]", "median localization error [mm]");
    }
    {
        const auto rows = read_csv(base / "tables" / "test_results.csv");
        std::vector<std::string> labels;
        std::vector<double> values;
        const std::string prefix = "loc_test_median_mm_";
        for (const auto& row : rows) {
            if (row.size() == 2 && row[0].rfind(prefix, 0) == 0) {
                labels.push_back(row[0].substr(prefix.size()));
                values.push_back(std::stod(row[1]));
            }
        }
        bar_figure(base / "figures" / "loc_error_by_net.svg", labels, values,
                   "test median localization error [mm]");
    }
}

}  // namespace fbgskin
