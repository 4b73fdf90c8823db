#include "earlyrisk/report.hpp"

#include <fstream>
#include <sstream>

namespace earlyrisk::report {
namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 560.0;
constexpr double kLeft = 70.0;
constexpr double kTop = 30.0;
constexpr double kPlot = 440.0;

const std::vector<std::string>& palette() {
    static const std::vector<std::string> colors{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                                                 "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939"};
    return colors;
}

std::string px(double v) { return format_fixed(v, 2); }

double sx(double fpr) { return kLeft + fpr * kPlot; }
double sy(double tpr) { return kTop + (1.0 - tpr) * kPlot; }

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string pipe_cell(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '|') out += "\\|";
        else out += c;
    }
    return out;
}

}  // namespace

std::string roc_svg(std::span<const NamedCurve> curves) {
    if (curves.empty()) {
        throw Error("render_roc_svg: no curves");
    }
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(kWidth) << "\" height=\"" << px(kHeight)
      << "\" viewBox=\"0 0 " << px(kWidth) << ' ' << px(kHeight) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s << "<rect x=\"0\" y=\"0\" width=\"" << px(kWidth) << "\" height=\"" << px(kHeight) << "\" fill=\"white\"/>\n";
    s << "<rect x=\"" << px(kLeft) << "\" y=\"" << px(kTop) << "\" width=\"" << px(kPlot) << "\" height=\"" << px(kPlot)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double v = i / 5.0;
        s << "<line x1=\"" << px(sx(v)) << "\" y1=\"" << px(sy(0.0)) << "\" x2=\"" << px(sx(v)) << "\" y2=\""
          << px(sy(0.0) + 5.0) << "\" stroke=\"black\"/>\n";
        s << "<text x=\"" << px(sx(v)) << "\" y=\"" << px(sy(0.0) + 18.0) << "\" text-anchor=\"middle\">"
          << format_fixed(v, 1) << "</text>\n";
        s << "<line x1=\"" << px(sx(0.0) - 5.0) << "\" y1=\"" << px(sy(v)) << "\" x2=\"" << px(sx(0.0)) << "\" y2=\""
          << px(sy(v)) << "\" stroke=\"black\"/>\n";
        s << "<text x=\"" << px(sx(0.0) - 8.0) << "\" y=\"" << px(sy(v) + 4.0) << "\" text-anchor=\"end\">"
          << format_fixed(v, 1) << "</text>\n";
    }
    s << "<text x=\"" << px(kLeft + kPlot / 2.0) << "\" y=\"" << px(kTop + kPlot + 40.0)
      << "\" text-anchor=\"middle\">False positive rate (FPR)</text>\n";
    s << "<text x=\"20.00\" y=\"" << px(kTop + kPlot / 2.0) << "\" text-anchor=\"middle\" transform=\"rotate(-90 20.00 "
      << px(kTop + kPlot / 2.0) << ")\">True positive rate (TPR)</text>\n";
    s << "<line class=\"diagonal\" x1=\"" << px(sx(0.0)) << "\" y1=\"" << px(sy(0.0)) << "\" x2=\"" << px(sx(1.0))
      << "\" y2=\"" << px(sy(1.0)) << "\" stroke=\"#999999\" stroke-dasharray=\"6 4\"/>\n";
    for (std::size_t i = 0; i < curves.size(); ++i) {
        const auto& color = palette()[i % palette().size()];
        s << "<polyline data-model=\"" << escape(curves[i].model) << "\" fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t j = 0; j < curves[i].curve.points.size(); ++j) {
            const auto& p = curves[i].curve.points[j];
            s << (j ? " " : "") << px(sx(p.fpr)) << ',' << px(sy(p.tpr));
        }
        s << "\"/>\n";
    }
    const double lx = kLeft + kPlot + 20.0;
    for (std::size_t i = 0; i < curves.size(); ++i) {
        const double ly = kTop + 10.0 + 20.0 * static_cast<double>(i);
        const auto& color = palette()[i % palette().size()];
        s << "<line x1=\"" << px(lx) << "\" y1=\"" << px(ly) << "\" x2=\"" << px(lx + 24.0) << "\" y2=\"" << px(ly)
          << "\" stroke=\"" << color << "\" stroke-width=\"3\"/>\n";
        s << "<text x=\"" << px(lx + 30.0) << "\" y=\"" << px(ly + 4.0) << "\">" << escape(curves[i].model)
          << " (AUC " << format_fixed(curves[i].curve.auc, 3) << ")</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

void render_roc_svg(std::span<const NamedCurve> curves, const std::filesystem::path& path) {
    const std::string svg = roc_svg(curves);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
    out << svg;
}

std::string render_markdown(const ReportData& d) {
    std::ostringstream s;
    s << "# earlyrisk run report\n\n";
    s << "- toolkit version: " << d.version << "\n";
    s << "- data: `" << d.data_path << "`\n";
    s << "- seed: " << d.seed << "\n\n";

    s << "## Data\n\n";
    s << d.rows << " rows, " << d.positives << " positive, " << d.feature_names.size() << " features.\n\n";
    for (const auto& [name, norm] : d.normalized) {
        s << "`" << name << "` is min-max scaled with min " << format_roundtrip(norm.min) << " and max "
          << format_roundtrip(norm.max)
          << " taken over all rows before the train/test split. Test rows therefore influence the scaling of the "
             "training data (a mild leakage).\n\n";
    }

    s << "## Association rules\n\n";
    s << d.rule_count << " rules written to `rules.csv`.";
    if (!d.top_rules.empty()) {
        s << " Top " << d.top_rules.size() << ":\n\n";
        s << "| antecedent | consequent | support | confidence | lift |\n|---|---|---:|---:|---:|\n";
        for (const auto& r : d.top_rules) {
            s << "| " << pipe_cell(r[0]) << " | " << pipe_cell(r[1]) << " | " << r[2] << " | " << r[3] << " | " << r[4]
              << " |\n";
        }
    }
    s << "\n";

    s << "## Feature votes\n\n";
    if (!d.votes.header.empty()) {
        s << '|';
        for (const auto& h : d.votes.header) s << ' ' << h << " |";
        s << "\n|";
        for (std::size_t i = 0; i < d.votes.header.size(); ++i) s << "---|";
        s << '\n';
        for (const auto& row : d.votes.rows) {
            s << '|';
            for (const auto& cell : row) s << ' ' << cell << " |";
            s << '\n';
        }
    }
    s << "\nChosen features (" << d.chosen.size() << "): ";
    for (std::size_t i = 0; i < d.chosen.size(); ++i) s << (i ? ", " : "") << d.chosen[i];
    s << "\n\n";

    s << "## Model performance\n\n";
    s << "| model | accuracy | cv_accuracy | precision | recall | f1 | auc |\n|---|---:|---:|---:|---:|---:|---:|\n";
    for (const auto& m : d.metrics) {
        s << "| " << m.model << " | " << format_fixed(m.accuracy, 6) << " | " << format_fixed(m.cv_accuracy, 6)
          << " | " << format_fixed(m.precision, 6) << " | " << format_fixed(m.recall, 6) << " | "
          << format_fixed(m.f1, 6) << " | " << format_fixed(m.auc, 6) << " |\n";
    }
    s << "\n### Confusion matrices\n\n| model | tn | fp | fn | tp |\n|---|---:|---:|---:|---:|\n";
    std::vector<std::string> degenerate;
    for (const auto& [model, cm] : d.confusion) {
        s << "| " << model << " | " << cm.tn << " | " << cm.fp << " | " << cm.fn << " | " << cm.tp << " |\n";
        const auto m = eval::metrics(cm);
        if (m.precision_degenerate) degenerate.push_back(model + ": precision undefined (no positive predictions), reported as 0");
        if (m.recall_degenerate) degenerate.push_back(model + ": recall undefined (no positive labels), reported as 0");
        if (m.f1_degenerate) degenerate.push_back(model + ": F1 undefined (precision + recall = 0), reported as 0");
    }
    s << "\n### Degenerate metrics\n\n";
    if (degenerate.empty()) {
        s << "None.\n";
    } else {
        for (const auto& line : degenerate) s << "- " << line << '\n';
    }
    s << "\nROC curves: `roc.svg`.\n\n";

    s << "## Deviations from reference results\n\n";
    std::size_t failed = 0;
    for (const auto& c : d.checks) {
        if (c.passed) continue;
        ++failed;
        s << "- " << c.description << ": expected " << c.expected << ", observed " << c.observed << '\n';
    }
    if (failed == 0) s << "None; every reference check is within tolerance.\n";
    s << "\n### All reference checks\n\n| check | expected | observed | status |\n|---|---|---|---|\n";
    for (const auto& c : d.checks) {
        s << "| " << pipe_cell(c.description) << " | " << c.expected << " | " << c.observed << " | "
          << (c.passed ? "ok" : "outside tolerance") << " |\n";
    }
    return s.str();
}

}  // namespace earlyrisk::report
