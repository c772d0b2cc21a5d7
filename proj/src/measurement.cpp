#include "gnm/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

namespace gnm {

// ---------------------------------------------------------------------------
// density

namespace {

/// Offsets of the candidate copies of a neighbor in a periodic corridor.
void neighbor_images(Vec2 q, Vec2 center, const DensityConfig& cfg, double reach,
                     std::vector<Vec2>& out) {
    if (!cfg.periodic_x) {
        if ((q - center).norm() <= reach) out.push_back(q);
        return;
    }
    for (int s = -1; s <= 1; ++s) {
        const Vec2 img{q.x + s * cfg.period, q.y};
        if ((img - center).norm() <= reach) out.push_back(img);
    }
}

}  // namespace

double local_density_disc(size_t index, std::span<const Vec2> positions,
                          const DensityConfig& cfg) {
    const Vec2 c = positions[index];
    int count = 0;
    std::vector<Vec2> images;
    for (size_t j = 0; j < positions.size(); ++j) {
        images.clear();
        neighbor_images(positions[j], c, cfg, cfg.fallback_radius, images);
        count += static_cast<int>(images.size());
    }
    return count / (std::numbers::pi * cfg.fallback_radius * cfg.fallback_radius);
}

double local_density(size_t index, std::span<const Vec2> positions, const DensityConfig& cfg) {
    const Vec2 c = positions[index];
    const double cap_area = std::numbers::pi * cfg.cap_radius * cfg.cap_radius;

    // generous initial square; everything further than the cap only matters
    // through the area cap
    const double half = 4.0 * cfg.cap_radius;
    std::vector<Vec2> cell{{c.x - half, c.y - half},
                           {c.x + half, c.y - half},
                           {c.x + half, c.y + half},
                           {c.x - half, c.y + half}};

    if (cfg.domain) {
        const AABB& d = *cfg.domain;
        cell = clip::half_plane(cell, {0.0, d.lo.y}, {0.0, -1.0});
        cell = clip::half_plane(cell, {0.0, d.hi.y}, {0.0, 1.0});
        if (!cfg.periodic_x) {
            cell = clip::half_plane(cell, {d.lo.x, 0.0}, {-1.0, 0.0});
            cell = clip::half_plane(cell, {d.hi.x, 0.0}, {1.0, 0.0});
        }
    }

    std::vector<Vec2> images;
    const double reach = 2.0 * cfg.cap_radius + 1e-9;
    for (size_t j = 0; j < positions.size(); ++j) {
        if (j == index) continue;
        images.clear();
        neighbor_images(positions[j], c, cfg, reach, images);
        for (const Vec2& q : images) {
            const Vec2 mid = (c + q) * 0.5;
            const Vec2 n = q - c;
            if (n.norm2() == 0.0) continue;  // coincident points: no bisector
            cell = clip::half_plane(cell, mid, n);
            if (cell.empty()) break;
        }
        if (cell.empty()) break;
    }

    const double area = clip::polygon_area(cell);
    if (!(area > 0.0) || !std::isfinite(area)) return local_density_disc(index, positions, cfg);
    return 1.0 / std::min(area, cap_area);
}

// ---------------------------------------------------------------------------
// series

std::vector<double> zero_phase_filter(std::span<const double> series, int width) {
    const int n = static_cast<int>(series.size());
    if (width < 1 || n < width)
        throw std::invalid_argument("zero_phase_filter: series shorter than width");

    // forward MA(width) o backward MA(width) == symmetric triangular kernel
    const int half = width - 1;
    std::vector<double> coeff(half + 1);
    const double w2 = static_cast<double>(width) * width;
    for (int k = 0; k <= half; ++k) coeff[k] = (width - k) / w2;

    const auto mirrored = [&](int i) -> double {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * (n - 1) - i;
        return series[std::clamp(i, 0, n - 1)];
    };

    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) {
        double acc = coeff[0] * mirrored(i);
        // paired terms keep the sum symmetric, so reversal commutes bit-exactly
        for (int k = 1; k <= half; ++k) acc += coeff[k] * (mirrored(i - k) + mirrored(i + k));
        out[i] = acc;
    }
    return out;
}

double flow_rate(std::span<const double> crossing_times,
                 std::optional<std::pair<double, double>> window) {
    if (crossing_times.empty()) return 0.0;
    double t0, t1;
    if (window) {
        t0 = window->first;
        t1 = window->second;
    } else {
        const auto [mn, mx] = std::minmax_element(crossing_times.begin(), crossing_times.end());
        t0 = *mn;
        t1 = *mx;
    }
    if (!(t1 > t0)) return 0.0;
    long count = 0;
    for (const double t : crossing_times)
        if (t >= t0 && t <= t1) ++count;
    return count / (t1 - t0);
}

SpeedStats speed_statistics(std::span<const double> speeds, double v_mean, double v_std) {
    SpeedStats st;
    st.samples = speeds.size();
    if (speeds.empty()) return st;
    double mean = 0.0;
    for (const double v : speeds) mean += v;
    mean /= speeds.size();
    double var = 0.0;
    for (const double v : speeds) var += (v - mean) * (v - mean);
    var /= speeds.size();
    st.mu_norm = mean / v_mean;
    st.sigma_norm = std::sqrt(var) / v_std;
    return st;
}

LaneResult detect_lanes(std::span<const double> cross_positions, double y_min, double y_max,
                        double bin_width, int filter_width) {
    LaneResult res;
    const int nbins = std::max(1, static_cast<int>(std::round((y_max - y_min) / bin_width)));
    std::vector<double> hist(nbins, 0.0);
    for (const double y : cross_positions) {
        int b = static_cast<int>((y - y_min) / bin_width);
        b = std::clamp(b, 0, nbins - 1);
        hist[b] += 1.0;
    }
    res.histogram = nbins >= filter_width ? zero_phase_filter(hist, filter_width) : hist;

    double maxv = 0.0, meanv = 0.0;
    for (const double v : res.histogram) {
        maxv = std::max(maxv, v);
        meanv += v;
    }
    meanv /= res.histogram.size();
    if (maxv < 1.5 * meanv || maxv <= 0.0) {
        res.no_lanes = true;
        return res;
    }

    // plateau-aware local maxima above half the global maximum
    const double level = 0.5 * maxv;
    const int nb = static_cast<int>(res.histogram.size());
    int i = 0;
    while (i < nb) {
        int j = i;
        while (j + 1 < nb && res.histogram[j + 1] == res.histogram[i]) ++j;
        const double left = i > 0 ? res.histogram[i - 1] : -1.0;
        const double right = j + 1 < nb ? res.histogram[j + 1] : -1.0;
        if (res.histogram[i] > left && res.histogram[i] > right &&
            res.histogram[i] >= level)
            ++res.count;
        i = j + 1;
    }
    return res;
}

// ---------------------------------------------------------------------------
// pairwise distance

namespace {

double pair_dist(Vec2 a, Vec2 b, bool periodic, double period) {
    Vec2 d = a - b;
    if (periodic) d.x = min_image(d.x, period);
    return d.norm();
}

}  // namespace

double min_pairwise_distance(std::span<const Vec2> positions, bool periodic_x, double period) {
    if (positions.size() < 2)
        throw std::invalid_argument("min_pairwise_distance: needs >= 2 positions");
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < positions.size(); ++i)
        for (size_t j = i + 1; j < positions.size(); ++j)
            best = std::min(best, pair_dist(positions[i], positions[j], periodic_x, period));
    return best;
}

double min_pairwise_distance_indexed(std::span<const Vec2> positions, double cutoff,
                                     bool periodic_x, double period) {
    if (positions.size() < 2)
        throw std::invalid_argument("min_pairwise_distance: needs >= 2 positions");

    AABB box{positions[0], positions[0]};
    for (const Vec2& p : positions) {
        box.lo.x = std::min(box.lo.x, p.x);
        box.lo.y = std::min(box.lo.y, p.y);
        box.hi.x = std::max(box.hi.x, p.x);
        box.hi.y = std::max(box.hi.y, p.y);
    }
    const double cell = cutoff;
    int ncx, ncy;
    double inv_cx;
    if (periodic_x) {
        ncx = std::max(1, static_cast<int>(std::floor(period / cell)));
        inv_cx = ncx / period;
    } else {
        ncx = std::max(1, static_cast<int>(std::ceil((box.width() + 1e-9) / cell)));
        inv_cx = 1.0 / cell;
    }
    ncy = std::max(1, static_cast<int>(std::ceil((box.height() + 1e-9) / cell)));

    const auto cx = [&](double x) {
        int i = static_cast<int>(std::floor((x - box.lo.x) * inv_cx));
        if (periodic_x) {
            i %= ncx;
            if (i < 0) i += ncx;
            return i;
        }
        return std::clamp(i, 0, ncx - 1);
    };
    const auto cy = [&](double y) {
        return std::clamp(static_cast<int>(std::floor((y - box.lo.y) / cell)), 0, ncy - 1);
    };

    std::vector<std::vector<int>> buckets(static_cast<size_t>(ncx) * ncy);
    for (size_t k = 0; k < positions.size(); ++k)
        buckets[static_cast<size_t>(cy(positions[k].y)) * ncx + cx(positions[k].x)].push_back(
            static_cast<int>(k));

    double best = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < positions.size(); ++k) {
        const int ci = cx(positions[k].x);
        const int cj = cy(positions[k].y);
        for (int dx = -1; dx <= 1; ++dx) {
            int ix = ci + dx;
            if (periodic_x) {
                ix %= ncx;
                if (ix < 0) ix += ncx;
                if (ncx <= 2 && dx == 1 && ncx == 1) continue;  // cell already visited
            } else if (ix < 0 || ix >= ncx) {
                continue;
            }
            for (int dy = -1; dy <= 1; ++dy) {
                const int iy = cj + dy;
                if (iy < 0 || iy >= ncy) continue;
                for (const int j : buckets[static_cast<size_t>(iy) * ncx + ix]) {
                    if (j <= static_cast<int>(k)) continue;
                    best = std::min(best,
                                    pair_dist(positions[k], positions[j], periodic_x, period));
                }
            }
        }
    }
    return best <= cutoff ? best : std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// sinks

TrajectorySink::TrajectorySink(const std::string& path) : path_(path) {
    buffer_ = "t,id,x,y,w,vdes\n";
}

void TrajectorySink::on_sample(double t, std::span<const Agent> agents) {
    char line[160];
    for (const Agent& a : agents) {
        if (!a.alive) continue;
        std::snprintf(line, sizeof(line), "%.6g,%d,%.10g,%.10g,%.10g,%.10g\n", t, a.id, a.x.x,
                      a.x.y, a.w, a.v_des);
        buffer_ += line;
    }
}

void TrajectorySink::finish() {
    std::ofstream out(path_);
    if (!out) throw std::runtime_error("cannot write trajectory file '" + path_ + "'");
    out << buffer_;
}

FlowSink::FlowSink(double line_x, bool periodic_x, double period)
    : line_x_(line_x), periodic_(periodic_x), period_(period) {}

void FlowSink::on_sample(double t, std::span<const Agent> agents) {
    for (const Agent& a : agents) {
        if (!a.alive) continue;
        if (a.id >= static_cast<int>(prev_.size())) {
            prev_.resize(a.id + 1, {-1.0, {}});
            crossed_.resize(a.id + 1, 0);
        }
        auto& [pt, pp] = prev_[a.id];
        if (pt >= 0.0 && !crossed_[a.id]) {
            double x0 = pp.x;
            double x1 = a.x.x;
            if (periodic_ && std::fabs(x1 - x0) > 0.5 * period_)
                x0 += (x1 > x0 ? period_ : -period_);  // unwrap the seam jump
            if (x0 < line_x_ && x1 >= line_x_) {
                const double frac = (line_x_ - x0) / (x1 - x0);
                crossings_.emplace_back(pt + frac * (t - pt), a.id);
                crossed_[a.id] = 1;
            }
        }
        prev_[a.id] = {t, a.x};
    }
}

std::vector<double> FlowSink::crossing_times() const {
    std::vector<double> ts;
    ts.reserve(crossings_.size());
    for (const auto& [t, id] : crossings_) ts.push_back(t);
    std::sort(ts.begin(), ts.end());
    return ts;
}

void FlowSink::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write flow file '" + path + "'");
    out << "t_cross,id\n";
    auto sorted = crossings_;
    std::sort(sorted.begin(), sorted.end());
    for (const auto& [t, id] : sorted) out << t << ',' << id << '\n';
}

MinDistanceSink::MinDistanceSink(double collision_threshold, bool periodic_x, double period,
                                 double cutoff)
    : threshold_(collision_threshold), periodic_(periodic_x), period_(period), cutoff_(cutoff) {}

void MinDistanceSink::on_sample(double t, std::span<const Agent> agents) {
    scratch_.clear();
    std::vector<int> ids;
    for (const Agent& a : agents) {
        if (!a.alive) continue;
        scratch_.push_back(a.x);
        ids.push_back(a.id);
    }
    if (scratch_.size() < 2) return;
    const double d = min_pairwise_distance_indexed(scratch_, cutoff_, periodic_, period_);
    run_min_ = std::min(run_min_, d);
    if (d < threshold_) {
        // identify the offending pair for the log
        for (size_t i = 0; i < scratch_.size(); ++i) {
            for (size_t j = i + 1; j < scratch_.size(); ++j) {
                const double dij = pair_dist(scratch_[i], scratch_[j], periodic_, period_);
                if (dij < threshold_)
                    collisions_.push_back({t, ids[i], ids[j], dij});
            }
        }
    }
}

void MinDistanceSink::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write collision file '" + path + "'");
    out << "t,id_a,id_b,dist\n";
    for (const Collision& c : collisions_)
        out << c.t << ',' << c.id_a << ',' << c.id_b << ',' << c.dist << '\n';
}

DensitySpeedSink::DensitySpeedSink(const MeasurementConfig& mc, const Scenario& scn)
    : cadence_(mc.density_cadence), warmup_(mc.warmup) {
    density_cfg_.periodic_x = scn.boundary == Boundary::PeriodicX;
    density_cfg_.period = scn.period();
    density_cfg_.domain = scn.domain;
}

void DensitySpeedSink::on_sample(double t, std::span<const Agent> agents) {
    std::vector<std::pair<int, Vec2>> current;
    current.reserve(agents.size());
    for (const Agent& a : agents)
        if (a.alive) current.emplace_back(a.id, a.x);

    if (t + 1e-9 >= next_t_ && prev_t_ >= 0.0 && t > prev_t_) {
        next_t_ += cadence_;
        std::vector<Vec2> pos;
        pos.reserve(current.size());
        for (const auto& [id, x] : current) pos.push_back(x);
        const double dt = t - prev_t_;
        for (size_t k = 0; k < current.size(); ++k) {
            const auto& [id, x] = current[k];
            const auto it =
                std::find_if(prev_positions_.begin(), prev_positions_.end(),
                             [id = id](const auto& pr) { return pr.first == id; });
            if (it == prev_positions_.end()) continue;
            Vec2 dx = x - it->second;
            if (density_cfg_.periodic_x) dx.x = min_image(dx.x, density_cfg_.period);
            const double speed = dx.norm() / dt;
            const double rho = local_density(k, pos, density_cfg_);
            rows_.push_back({t, id, rho, speed});
        }
    }
    prev_t_ = t;
    prev_positions_ = std::move(current);
}

std::vector<double> DensitySpeedSink::stationary_speeds() const {
    std::vector<double> v;
    for (const Row& r : rows_)
        if (r.t >= warmup_) v.push_back(r.speed);
    return v;
}

void DensitySpeedSink::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write density file '" + path + "'");
    out << "t,id,rho,v\n";
    for (const Row& r : rows_) out << r.t << ',' << r.id << ',' << r.rho << ',' << r.speed << '\n';
}

void SnapshotSink::on_sample(double t, std::span<const Agent> agents) {
    if (captured_ >= 0.0 || t + 1e-9 < at_) return;
    captured_ = t;
    agents_.clear();
    for (const Agent& a : agents)
        if (a.alive) agents_.push_back(a);
}

}  // namespace gnm
