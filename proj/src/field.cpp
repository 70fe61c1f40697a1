#include "exdyn/field.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "exdyn/errors.hpp"

namespace exdyn {

TimeGrid TimeGrid::covering(double t_final, double dt) {
    if (!(dt > 0.0) || !(t_final >= 0.0)) throw ConfigError("time grid needs dt > 0 and t_final >= 0");
    const double n = std::round(t_final / dt);
    if (std::abs(n * dt - t_final) > 1e-9 * std::max(1.0, t_final))
        throw ConfigError("t_final is not an integer multiple of dt");
    return TimeGrid{dt, static_cast<int>(n)};
}

double ControlField::value_at(double t) const {
    if (samples.empty() || t < 0.0) return 0.0;
    const double x = t / dt;
    const auto last = samples.size() - 1;
    if (x >= static_cast<double>(last)) return x > static_cast<double>(last) + 1e-9 ? 0.0 : samples[last];
    const auto j = static_cast<std::size_t>(x);
    const double w = x - static_cast<double>(j);
    return (1.0 - w) * samples[j] + w * samples[j + 1];
}

double ControlField::max_abs() const {
    double m = 0.0;
    for (double v : samples) m = std::max(m, std::abs(v));
    return m;
}

double ControlField::intensity() const {
    if (samples.size() < 3) return 0.0;
    const double t_fin = t_final();
    double sum = 0.0;
    for (std::size_t j = 1; j + 1 < samples.size(); ++j) {
        const double s = std::sin(std::numbers::pi * j * dt / t_fin);
        sum += samples[j] * samples[j] / (s * s);
    }
    return sum * dt;
}

ControlField ControlField::zeros(const TimeGrid& grid) {
    ControlField f;
    f.dt = grid.dt;
    f.samples.assign(grid.n_steps + 1, 0.0);
    return f;
}

ControlField read_field_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open field file " + path);
    std::string line;
    std::vector<double> t, e;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (header) {
            header = false;
            if (line.find("t_fs") != std::string::npos) continue;
        }
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double a = 0.0, b = 0.0;
        if (!(ls >> a >> b)) throw ConfigError("malformed field row in " + path + ": " + line);
        t.push_back(a);
        e.push_back(b);
    }
    if (t.size() < 2) throw ConfigError("field file " + path + " needs at least two samples");
    const double dt = t[1] - t[0];
    if (!(dt > 0.0) || std::abs(t[0]) > 1e-9) throw ConfigError("field grid must start at 0 and increase");
    for (std::size_t j = 1; j < t.size(); ++j)
        if (std::abs(t[j] - t[0] - j * dt) > 1e-6 * dt) throw ConfigError("field grid is not uniform");
    ControlField f;
    f.dt = dt;
    f.samples = std::move(e);
    return f;
}

std::string field_csv(const ControlField& field) {
    std::ostringstream os;
    os.precision(12);
    os << "t_fs,E_GVm\n";
    for (std::size_t j = 0; j < field.samples.size(); ++j)
        os << j * field.dt << ',' << field.samples[j] << '\n';
    return os.str();
}

}  // namespace exdyn
