#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace allelic {

enum class Family { Kingman, BolthausenSznitman, Beta, Star, GridDensity };

// A finite measure Lambda on [0,1] selecting the coalescent family.
//   Kingman             unit mass at 0
//   BolthausenSznitman  uniform density on [0,1]
//   Beta                Beta(2-alpha, alpha) density, 0 < alpha < 2
//   Star                unit mass at 1
//   GridDensity         user-supplied midpoint quadrature (point, mass) pairs
struct LambdaModel {
    Family family = Family::BolthausenSznitman;
    double alpha = 0.0;
    std::vector<std::pair<double, double>> grid;

    static LambdaModel kingman() { return {Family::Kingman, 0.0, {}}; }
    static LambdaModel bolthausen_sznitman() { return {Family::BolthausenSznitman, 0.0, {}}; }
    static LambdaModel beta(double alpha) { return {Family::Beta, alpha, {}}; }
    static LambdaModel star() { return {Family::Star, 0.0, {}}; }
    static LambdaModel grid_density(std::vector<std::pair<double, double>> g) {
        return {Family::GridDensity, 0.0, std::move(g)};
    }

    // throws std::invalid_argument on a malformed model
    void validate() const;

    // short spec string: kingman | bs | star | beta:<alpha> | grid:<path>
    std::string spec_string() const;
};

// Parses a CLI model spec string; grid:<path> reads a two-column CSV of
// (point in [0,1], mass >= 0).
LambdaModel parse_model_spec(const std::string& spec);

} // namespace allelic
