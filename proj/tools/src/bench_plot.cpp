#include "bench_plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "bench_runner.hpp"

namespace simba::bench {

namespace {

constexpr double kWidth = 760.0, kHeight = 480.0;
constexpr double kLeft = 70.0, kRight = 20.0, kTop = 30.0, kBottom = 50.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

std::string svg_escape(const std::string& s) {
    std::string out;
    for (const char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

void write_chart(const std::filesystem::path& path, const std::vector<Series>& series,
                 const std::string& x_label, const std::string& title) {
    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
    bool first = true;
    bool all_positive = true;
    for (const Series& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (s.y[i] <= 0.0) all_positive = false;
            if (first) {
                x_min = x_max = s.x[i];
                y_min = y_max = s.y[i];
                first = false;
            } else {
                x_min = std::min(x_min, s.x[i]);
                x_max = std::max(x_max, s.x[i]);
                y_min = std::min(y_min, s.y[i]);
                y_max = std::max(y_max, s.y[i]);
            }
        }
    }
    if (x_max <= x_min) x_max = x_min + 1.0;

    // log scale on y when every value is positive
    const bool log_y = all_positive && y_min > 0.0;
    double lo = log_y ? std::log10(y_min) : y_min;
    double hi = log_y ? std::log10(y_max) : y_max;
    if (hi <= lo) hi = lo + 1.0;

    const auto map_x = [&](double v) {
        return kLeft + (v - x_min) / (x_max - x_min) * (kWidth - kLeft - kRight);
    };
    const auto map_y = [&](double v) {
        const double t = ((log_y ? std::log10(v) : v) - lo) / (hi - lo);
        return kHeight - kBottom - t * (kHeight - kTop - kBottom);
    };

    std::ofstream out(path);
    if (!out) throw IoError("cannot write figure " + path.string());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">"
        << svg_escape(title) << "</text>\n";

    // axes
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
        << kHeight - kBottom << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\""
        << kWidth - kRight << "\" y2=\"" << kHeight - kBottom << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\"" << kHeight - 12
        << "\" text-anchor=\"middle\" font-size=\"12\">" << svg_escape(x_label) << "</text>\n";
    out << "<text x=\"16\" y=\"" << kHeight / 2
        << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
        << kHeight / 2 << ")\">" << (log_y ? "loss (log scale)" : "loss") << "</text>\n";

    // y tick labels at the extremes
    for (const double v : {y_min, y_max}) {
        std::ostringstream tick;
        tick.precision(3);
        tick << std::scientific << v;
        out << "<text x=\"" << kLeft - 6 << "\" y=\"" << map_y(v) + 4
            << "\" text-anchor=\"end\" font-size=\"10\">" << tick.str() << "</text>\n";
    }
    for (const double v : {x_min, x_max}) {
        std::ostringstream tick;
        tick.precision(4);
        tick << v;
        out << "<text x=\"" << map_x(v) << "\" y=\"" << kHeight - kBottom + 16
            << "\" text-anchor=\"middle\" font-size=\"10\">" << tick.str() << "</text>\n";
    }

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % (sizeof kPalette / sizeof kPalette[0])];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < series[s].x.size(); ++i) {
            if (i > 0) out << ' ';
            out << map_x(series[s].x[i]) << ',' << map_y(series[s].y[i]);
        }
        out << "\"/>\n";
        // legend entry
        const double ly = kTop + 16.0 * static_cast<double>(s);
        out << "<line x1=\"" << kWidth - 170 << "\" y1=\"" << ly << "\" x2=\"" << kWidth - 140
            << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << kWidth - 134 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">"
            << svg_escape(series[s].label) << "</text>\n";
    }
    out << "</svg>\n";
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

std::vector<std::filesystem::path> plot_traces(const std::filesystem::path& trace_dir,
                                               const std::filesystem::path& out_dir) {
    if (!std::filesystem::is_directory(trace_dir))
        throw IoError("not a directory: " + trace_dir.string());

    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(trace_dir)) {
        if (entry.path().extension() == ".csv" && entry.path().filename() != "summary.csv" &&
            entry.path().filename() != "certificate.csv")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IoError("no traces in " + trace_dir.string());

    std::map<std::string, std::vector<TraceData>> grouped;
    std::vector<std::string> order;
    for (const auto& file : files) {
        TraceData trace = read_trace(file);
        if (std::find(order.begin(), order.end(), trace.optimizer) == order.end())
            order.push_back(trace.optimizer);
        grouped[trace.optimizer].push_back(std::move(trace));
    }

    // Honor the optimizer order of the echoed config when available.
    const std::filesystem::path echo = trace_dir / "config.json";
    if (std::filesystem::exists(echo)) {
        try {
            std::ifstream in(echo);
            const nlohmann::json doc = nlohmann::json::parse(in);
            std::vector<std::string> config_order;
            for (const auto& node : doc.at("optimizers")) {
                const std::string label =
                    node.value("label", node.at("name").get<std::string>());
                if (grouped.count(label) != 0U &&
                    std::find(config_order.begin(), config_order.end(), label) ==
                        config_order.end())
                    config_order.push_back(label);
            }
            for (const std::string& label : order)
                if (std::find(config_order.begin(), config_order.end(), label) ==
                    config_order.end())
                    config_order.push_back(label);
            order = config_order;
        } catch (const nlohmann::json::exception&) {
            // fall back to first-seen order
        }
    }

    std::vector<Series> by_iter, by_time;
    for (const std::string& label : order) {
        const std::vector<TraceData>& runs = grouped[label];
        std::size_t rows = runs.front().losses.size();
        for (const TraceData& run : runs) rows = std::min(rows, run.losses.size());

        Series iter_series{label, {}, {}}, time_series{label, {}, {}};
        for (std::size_t i = 0; i < rows; ++i) {
            double loss = 0.0, seconds = 0.0;
            for (const TraceData& run : runs) {
                loss += run.losses[i];
                seconds += run.seconds[i];
            }
            loss /= static_cast<double>(runs.size());
            seconds /= static_cast<double>(runs.size());
            iter_series.x.push_back(static_cast<double>(runs.front().iters[i]));
            iter_series.y.push_back(loss);
            time_series.x.push_back(seconds);
            time_series.y.push_back(loss);
        }
        by_iter.push_back(std::move(iter_series));
        by_time.push_back(std::move(time_series));
    }

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir.string());

    const std::filesystem::path iter_path = out_dir / "loss_vs_iter.svg";
    const std::filesystem::path time_path = out_dir / "loss_vs_time.svg";
    write_chart(iter_path, by_iter, "iteration", "Training loss by iteration");
    write_chart(time_path, by_time, "wall-clock seconds", "Training loss by wall-clock time");
    return {iter_path, time_path};
}

}  // namespace simba::bench
