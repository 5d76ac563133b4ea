#include "allelic/lambda_model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace allelic {

void LambdaModel::validate() const {
    if (family == Family::Beta) {
        if (!(alpha > 0.0) || !(alpha < 2.0)) {
            throw std::invalid_argument("beta model requires 0 < alpha < 2");
        }
    }
    if (family == Family::GridDensity) {
        if (grid.empty()) throw std::invalid_argument("grid model requires at least one (point, mass) pair");
        double total = 0.0;
        for (const auto& [x, w] : grid) {
            if (!(x >= 0.0) || !(x <= 1.0)) throw std::invalid_argument("grid point outside [0,1]");
            if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("grid mass must be finite and >= 0");
            total += w;
        }
        if (!std::isfinite(total)) throw std::invalid_argument("grid total mass must be finite");
    }
}

std::string LambdaModel::spec_string() const {
    switch (family) {
        case Family::Kingman: return "kingman";
        case Family::BolthausenSznitman: return "bs";
        case Family::Star: return "star";
        case Family::Beta: {
            std::ostringstream os;
            os << "beta:" << alpha;
            return os.str();
        }
        case Family::GridDensity: return "grid";
    }
    return "?";
}

LambdaModel parse_model_spec(const std::string& spec) {
    if (spec == "kingman") return LambdaModel::kingman();
    if (spec == "bs" || spec == "bolthausen-sznitman") return LambdaModel::bolthausen_sznitman();
    if (spec == "star") return LambdaModel::star();
    if (spec.rfind("beta:", 0) == 0) {
        double alpha = 0.0;
        try {
            alpha = std::stod(spec.substr(5));
        } catch (const std::exception&) {
            throw std::invalid_argument("bad alpha in model spec '" + spec + "'");
        }
        auto m = LambdaModel::beta(alpha);
        m.validate();
        return m;
    }
    if (spec.rfind("grid:", 0) == 0) {
        const std::string path = spec.substr(5);
        std::ifstream in(path);
        if (!in) throw std::invalid_argument("cannot open grid file '" + path + "'");
        std::vector<std::pair<double, double>> grid;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            for (auto& c : line) {
                if (c == ',') c = ' ';
            }
            std::istringstream ls(line);
            double x = 0.0, w = 0.0;
            if (!(ls >> x >> w)) throw std::invalid_argument("malformed grid line '" + line + "'");
            grid.emplace_back(x, w);
        }
        auto m = LambdaModel::grid_density(std::move(grid));
        m.validate();
        return m;
    }
    throw std::invalid_argument("unknown model spec '" + spec + "'");
}

} // namespace allelic
