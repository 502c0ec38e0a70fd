// WGS84 transverse Mercator, Gauss-Krueger series through n^6 (coefficients
// per Karney 2011 / Kruger 1912). Inverse latitude is recovered from the
// conformal latitude with a Newton solve on the isometric-latitude relation.

#include <cmath>
#include <string>

#include "staykit/common.hpp"
#include "staykit/geo.hpp"

namespace staykit::geo {
namespace {

constexpr double kA = 6378137.0;               // WGS84 semi-major axis
constexpr double kF = 1.0 / 298.257223563;     // WGS84 flattening
constexpr double kK0 = 0.9996;                 // UTM scale on the central meridian
constexpr double kFalseEasting = 500000.0;
constexpr double kFalseNorthingSouth = 10000000.0;
constexpr double kDeg = 3.14159265358979323846 / 180.0;

struct Series {
  double e;        // first eccentricity
  double rect_a;   // rectifying radius A
  double alpha[6];
  double beta[6];
};

const Series& series() {
  static const Series s = [] {
    Series r;
    const double n = kF / (2.0 - kF);
    const double n2 = n * n, n3 = n2 * n, n4 = n3 * n, n5 = n4 * n, n6 = n5 * n;
    r.e = std::sqrt(kF * (2.0 - kF));
    r.rect_a = kA / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0 + n6 / 256.0);
    r.alpha[0] = n / 2.0 - 2.0 / 3.0 * n2 + 5.0 / 16.0 * n3 + 41.0 / 180.0 * n4 -
                 127.0 / 288.0 * n5 + 7891.0 / 37800.0 * n6;
    r.alpha[1] = 13.0 / 48.0 * n2 - 3.0 / 5.0 * n3 + 557.0 / 1440.0 * n4 + 281.0 / 630.0 * n5 -
                 1983433.0 / 1935360.0 * n6;
    r.alpha[2] = 61.0 / 240.0 * n3 - 103.0 / 140.0 * n4 + 15061.0 / 26880.0 * n5 +
                 167603.0 / 181440.0 * n6;
    r.alpha[3] = 49561.0 / 161280.0 * n4 - 179.0 / 168.0 * n5 + 6601661.0 / 7257600.0 * n6;
    r.alpha[4] = 34729.0 / 80640.0 * n5 - 3418889.0 / 1995840.0 * n6;
    r.alpha[5] = 212378941.0 / 319334400.0 * n6;
    r.beta[0] = n / 2.0 - 2.0 / 3.0 * n2 + 37.0 / 96.0 * n3 - 1.0 / 360.0 * n4 -
                81.0 / 512.0 * n5 + 96199.0 / 604800.0 * n6;
    r.beta[1] = 1.0 / 48.0 * n2 + 1.0 / 15.0 * n3 - 437.0 / 1440.0 * n4 + 46.0 / 105.0 * n5 -
                1118711.0 / 3870720.0 * n6;
    r.beta[2] = 17.0 / 480.0 * n3 - 37.0 / 840.0 * n4 - 209.0 / 4480.0 * n5 +
                5569.0 / 90720.0 * n6;
    r.beta[3] = 4397.0 / 161280.0 * n4 - 11.0 / 504.0 * n5 - 830251.0 / 7257600.0 * n6;
    r.beta[4] = 4583.0 / 161280.0 * n5 - 108847.0 / 3991680.0 * n6;
    r.beta[5] = 20648693.0 / 638668800.0 * n6;
    return r;
  }();
  return s;
}

void check_zone(UtmZone zone) {
  if (zone.zone < 1 || zone.zone > 60)
    throw input_error("utm: zone out of range [1,60]: " + std::to_string(zone.zone));
}

// sin of the conformal latitude for geodetic latitude phi.
double sin_chi(double phi, double e) {
  const double s = std::sin(phi);
  return std::tanh(std::atanh(s) - e * std::atanh(e * s));
}

}  // namespace

int zone_from_lon(double lon_deg) {
  int zone = static_cast<int>(std::floor((lon_deg + 180.0) / 6.0)) + 1;
  if (zone < 1) zone = 1;
  if (zone > 60) zone = 60;
  return zone;
}

double central_meridian_deg(int zone) { return (zone - 1) * 6.0 - 180.0 + 3.0; }

XY project(double lat_deg, double lon_deg, UtmZone zone) {
  check_zone(zone);
  if (!(lat_deg >= -90.0 && lat_deg <= 90.0))
    throw input_error("utm: latitude out of range: " + std::to_string(lat_deg));
  if (!(lon_deg >= -180.0 && lon_deg <= 180.0))
    throw input_error("utm: longitude out of range: " + std::to_string(lon_deg));

  const Series& s = series();
  const double phi = lat_deg * kDeg;
  double dlon = lon_deg - central_meridian_deg(zone.zone);
  if (dlon > 180.0) dlon -= 360.0;
  if (dlon < -180.0) dlon += 360.0;
  const double lam = dlon * kDeg;

  const double schi = sin_chi(phi, s.e);
  const double cchi = std::sqrt(1.0 - schi * schi);
  const double xi_p = std::atan2(schi, cchi * std::cos(lam));
  const double eta_p = std::asinh(std::sin(lam) * cchi /
                                  std::hypot(schi, cchi * std::cos(lam)));

  double xi = xi_p, eta = eta_p;
  for (int j = 0; j < 6; ++j) {
    const double w = 2.0 * (j + 1);
    xi += s.alpha[j] * std::sin(w * xi_p) * std::cosh(w * eta_p);
    eta += s.alpha[j] * std::cos(w * xi_p) * std::sinh(w * eta_p);
  }

  XY out;
  out.x = kFalseEasting + kK0 * s.rect_a * eta;
  out.y = kK0 * s.rect_a * xi + (zone.north ? 0.0 : kFalseNorthingSouth);
  return out;
}

void unproject(XY p, UtmZone zone, double& lat_deg, double& lon_deg) {
  check_zone(zone);
  const Series& s = series();
  const double eta = (p.x - kFalseEasting) / (kK0 * s.rect_a);
  const double xi = (p.y - (zone.north ? 0.0 : kFalseNorthingSouth)) / (kK0 * s.rect_a);

  double xi_p = xi, eta_p = eta;
  for (int j = 0; j < 6; ++j) {
    const double w = 2.0 * (j + 1);
    xi_p -= s.beta[j] * std::sin(w * xi) * std::cosh(w * eta);
    eta_p -= s.beta[j] * std::cos(w * xi) * std::sinh(w * eta);
  }

  const double schi = std::sin(xi_p) / std::cosh(eta_p);
  const double chi = std::asin(std::min(1.0, std::max(-1.0, schi)));
  const double lam = std::atan2(std::sinh(eta_p), std::cos(xi_p));

  // Newton: find phi with sin_chi(phi) = sin(chi).
  double phi = chi;
  for (int it = 0; it < 10; ++it) {
    const double f = sin_chi(phi, s.e) - schi;
    const double sphi = std::sin(phi);
    const double cphi = std::cos(phi);
    const double psi_prime = (1.0 - s.e * s.e) / (cphi * (1.0 - s.e * s.e * sphi * sphi));
    const double sc = sin_chi(phi, s.e);
    const double dfdphi = (1.0 - sc * sc) * psi_prime;
    if (std::abs(dfdphi) < 1e-300) break;
    const double step = f / dfdphi;
    phi -= step;
    if (std::abs(step) < 1e-15) break;
  }

  lat_deg = phi / kDeg;
  lon_deg = central_meridian_deg(zone.zone) + lam / kDeg;
}

}  // namespace staykit::geo
