#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "gridlag/geo.hpp"

namespace gridlag::geo {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// tan(conformal latitude) from tan(geodetic latitude).
double taupf(double tau, double e) {
    const double tau1 = std::hypot(1.0, tau);
    const double sig = std::sinh(e * std::atanh(e * tau / tau1));
    return std::hypot(1.0, sig) * tau - sig * tau1;
}

// Inverse of taupf by Newton iteration.
double tauf(double taup, double e, double e2m) {
    double tau = taup / e2m;
    for (int i = 0; i < 8; ++i) {
        const double tau1 = std::hypot(1.0, tau);
        const double tp = taupf(tau, e);
        const double dtau = (taup - tp) * (1.0 + e2m * tau * tau) / (e2m * tau1 * std::hypot(1.0, tp));
        tau += dtau;
        if (std::abs(dtau) < 1e-15 * std::max(1.0, std::abs(tau))) break;
    }
    return tau;
}

}  // namespace

void ProjectionSpec::validate() const {
    if (utm_zone < 1 || utm_zone > 60) throw ConfigError(fmt::format("UTM zone {} outside 1..60", utm_zone));
    if (!(flattening > 0.0 && flattening < 1.0)) throw ConfigError("ellipsoid flattening must lie in (0, 1)");
    if (!(semi_major_m > 0.0)) throw ConfigError("ellipsoid semi-major axis must be positive");
    if (!(scale_k0 > 0.0)) throw ConfigError("scale factor must be positive");
}

TransverseMercator::TransverseMercator(const ProjectionSpec& spec) : spec_(spec) {
    spec_.validate();
    const double f = spec_.flattening;
    const double n = f / (2.0 - f);
    const double n2 = n * n, n3 = n2 * n, n4 = n3 * n, n5 = n4 * n, n6 = n5 * n;
    e_ = std::sqrt(f * (2.0 - f));
    e2m_ = 1.0 - e_ * e_;
    const double rectifying = spec_.semi_major_m / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0 + n6 / 256.0);
    scale_ = spec_.scale_k0 * rectifying;

    alpha_[1] = n / 2 - 2 * n2 / 3 + 5 * n3 / 16 + 41 * n4 / 180 - 127 * n5 / 288 + 7891 * n6 / 37800;
    alpha_[2] = 13 * n2 / 48 - 3 * n3 / 5 + 557 * n4 / 1440 + 281 * n5 / 630 - 1983433 * n6 / 1935360;
    alpha_[3] = 61 * n3 / 240 - 103 * n4 / 140 + 15061 * n5 / 26880 + 167603 * n6 / 181440;
    alpha_[4] = 49561 * n4 / 161280 - 179 * n5 / 168 + 6601661 * n6 / 7257600;
    alpha_[5] = 34729 * n5 / 80640 - 3418889 * n6 / 1995840;
    alpha_[6] = 212378941 * n6 / 319334400;

    beta_[1] = n / 2 - 2 * n2 / 3 + 37 * n3 / 96 - n4 / 360 - 81 * n5 / 512 + 96199 * n6 / 604800;
    beta_[2] = n2 / 48 + n3 / 15 - 437 * n4 / 1440 + 46 * n5 / 105 - 1118711 * n6 / 3870720;
    beta_[3] = 17 * n3 / 480 - 37 * n4 / 840 - 209 * n5 / 4480 + 5569 * n6 / 90720;
    beta_[4] = 4397 * n4 / 161280 - 11 * n5 / 504 - 830251 * n6 / 7257600;
    beta_[5] = 4583 * n5 / 161280 - 108847 * n6 / 3991680;
    beta_[6] = 20648693 * n6 / 638668800;
}

UtmPoint TransverseMercator::forward(double lat_deg, double lon_deg) const {
    if (!(std::abs(lat_deg) < 84.0))
        throw DataError(fmt::format("latitude {} outside the UTM domain (|lat| < 84)", lat_deg));
    if (!(std::abs(lon_deg) <= 180.0)) throw DataError(fmt::format("longitude {} outside [-180, 180]", lon_deg));

    double dlon = lon_deg - spec_.central_meridian_deg();
    dlon = std::remainder(dlon, 360.0);
    const double lam = dlon * kDeg;
    const double phi = lat_deg * kDeg;

    const double taup = taupf(std::tan(phi), e_);
    const double clam = std::cos(lam), slam = std::sin(lam);
    const double xip = std::atan2(taup, clam);
    const double etap = std::asinh(slam / std::hypot(taup, clam));

    double xi = xip, eta = etap;
    for (int j = 1; j <= 6; ++j) {
        xi += alpha_[j] * std::sin(2 * j * xip) * std::cosh(2 * j * etap);
        eta += alpha_[j] * std::cos(2 * j * xip) * std::sinh(2 * j * etap);
    }
    return {spec_.false_easting_m + scale_ * eta, spec_.false_northing_m() + scale_ * xi};
}

LonLat TransverseMercator::inverse(UtmPoint p) const {
    const double xi = (p.northing - spec_.false_northing_m()) / scale_;
    const double eta = (p.easting - spec_.false_easting_m) / scale_;
    double xip = xi, etap = eta;
    for (int j = 1; j <= 6; ++j) {
        xip -= beta_[j] * std::sin(2 * j * xi) * std::cosh(2 * j * eta);
        etap -= beta_[j] * std::cos(2 * j * xi) * std::sinh(2 * j * eta);
    }
    const double s = std::sinh(etap), c = std::cos(xip);
    const double r = std::hypot(s, c);
    const double taup = std::sin(xip) / r;
    const double lam = std::atan2(s, c);
    const double tau = tauf(taup, e_, e2m_);
    double lon = spec_.central_meridian_deg() + lam / kDeg;
    lon = std::remainder(lon, 360.0);
    return {lon, std::atan(tau) / kDeg};
}

UtmPoint wgs84_to_utm(double lat_deg, double lon_deg, const ProjectionSpec& spec) {
    return TransverseMercator(spec).forward(lat_deg, lon_deg);
}

LonLat utm_to_wgs84(UtmPoint p, const ProjectionSpec& spec) { return TransverseMercator(spec).inverse(p); }

}  // namespace gridlag::geo
