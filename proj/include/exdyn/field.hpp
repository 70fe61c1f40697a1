// field.hpp: real control field sampled on a uniform time grid

#pragma once

#include <string>
#include <vector>

namespace exdyn {

// Uniform grid t_j = j * dt, j = 0..n_steps.
struct TimeGrid {
    double dt{0.05};  // fs
    int n_steps{0};

    double t(int j) const { return j * dt; }
    double t_final() const { return n_steps * dt; }
    static TimeGrid covering(double t_final, double dt);
};

struct ControlField {
    double dt{0.05};               // fs
    std::vector<double> samples;   // GV/m at t_j = j * dt
    int iteration{0};
    double lambda{0.0};

    bool empty() const { return samples.empty(); }
    double t_final() const { return samples.empty() ? 0.0 : (samples.size() - 1) * dt; }
    // Linear interpolation; zero outside [0, t_final].
    double value_at(double t) const;
    double max_abs() const;

    // int |E|^2 / sin^2(pi t / T) dt by the trapezoid rule over interior
    // points (the field vanishes at both endpoints).
    double intensity() const;

    static ControlField zeros(const TimeGrid& grid);
};

// CSV "t_fs,E_GVm"; the grid must be uniform. Throws IoError / ConfigError.
ControlField read_field_csv(const std::string& path);
std::string field_csv(const ControlField& field);

}  // namespace exdyn
