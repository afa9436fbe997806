#pragma once

#include <algorithm>
#include <vector>

namespace longlens {

/// Hartigan's dip statistic: the sup-distance between the empirical CDF and
/// the closest unimodal CDF. Alternates greatest convex minorant and least
/// concave majorant fits over a shrinking modal interval. The result lies in
/// [1/(2n), 1/4]; `values` need not be sorted.
inline double dip_statistic(std::vector<double> values) {
  const auto n = static_cast<long>(values.size());
  if (n < 2) return n == 1 ? 0.5 : 0.0;
  std::sort(values.begin(), values.end());
  // 1-based copies keep the index arithmetic close to the usual formulation.
  std::vector<double> x(static_cast<std::size_t>(n) + 1);
  for (long i = 0; i < n; ++i) x[static_cast<std::size_t>(i) + 1] = values[static_cast<std::size_t>(i)];
  auto X = [&](long i) { return x[static_cast<std::size_t>(i)]; };

  // Work in units of 2n * dip until the end.
  double dip = 1.0;
  if (X(n) == X(1)) return dip / (2.0 * n);

  std::vector<long> mn(static_cast<std::size_t>(n) + 1), mj(static_cast<std::size_t>(n) + 1);
  auto MN = [&](long i) -> long& { return mn[static_cast<std::size_t>(i)]; };
  auto MJ = [&](long i) -> long& { return mj[static_cast<std::size_t>(i)]; };

  // Predecessor indices for the convex minorant.
  MN(1) = 1;
  for (long j = 2; j <= n; ++j) {
    MN(j) = j - 1;
    for (;;) {
      const long a = MN(j);
      const long b = MN(a);
      if (a == 1 || (X(j) - X(a)) * static_cast<double>(a - b) < (X(a) - X(b)) * static_cast<double>(j - a)) break;
      MN(j) = b;
    }
  }
  // Successor indices for the concave majorant.
  MJ(n) = n;
  for (long k = n - 1; k >= 1; --k) {
    MJ(k) = k + 1;
    for (;;) {
      const long a = MJ(k);
      const long b = MJ(a);
      if (a == n || (X(k) - X(a)) * static_cast<double>(a - b) < (X(a) - X(b)) * static_cast<double>(k - a)) break;
      MJ(k) = b;
    }
  }

  std::vector<long> gcm(static_cast<std::size_t>(n) + 2), lcm(static_cast<std::size_t>(n) + 2);
  auto G = [&](long i) -> long& { return gcm[static_cast<std::size_t>(i)]; };
  auto L = [&](long i) -> long& { return lcm[static_cast<std::size_t>(i)]; };

  long low = 1;
  long high = n;
  while (low < high) {
    // Convex minorant change points from high down to low.
    long ic = 1;
    G(1) = high;
    while (G(ic) > low) {
      G(ic + 1) = MN(G(ic));
      ++ic;
    }
    const long l_gcm = ic;
    // Concave majorant change points from low up to high.
    ic = 1;
    L(1) = low;
    while (L(ic) < high) {
      L(ic + 1) = MJ(L(ic));
      ++ic;
    }
    const long l_lcm = ic;

    // Largest vertical distance between the two fits on [low, high].
    // Walk both vertex lists upward from low; gcm[] is stored descending.
    double d = 0.0;
    long ig = l_gcm, ih = 1;
    if (l_gcm != 2 || l_lcm != 2) {
      long ix = l_gcm - 1, iy = 2;
      do {
        const long gx = G(ix);
        const long ly = L(iy);
        if (gx > ly) {
          // Majorant vertex inside the minorant segment [G(ix+1), gx].
          const long g1 = G(ix + 1);
          const double dx = static_cast<double>(ly - g1 + 1) -
                            (X(ly) - X(g1)) * static_cast<double>(gx - g1) / (X(gx) - X(g1));
          ++iy;
          if (dx >= d) {
            d = dx;
            ig = ix + 1;
            ih = iy - 1;
          }
        } else {
          const long l1 = L(iy - 1);
          const double dx = (X(gx) - X(l1)) * static_cast<double>(ly - l1) / (X(ly) - X(l1)) -
                            static_cast<double>(gx - l1 - 1);
          --ix;
          if (dx >= d) {
            d = dx;
            ig = ix + 1;
            ih = iy;
          }
        }
        ix = std::max(ix, 1L);
        iy = std::min(iy, l_lcm);
      } while (G(ix) != L(iy));
    } else {
      d = 1.0;
    }
    if (d < dip) break;

    // Dip of the convex minorant over its retained segment.
    double dip_l = 0.0;
    for (long j = ig; j < l_gcm; ++j) {
      double max_t = 1.0;
      const long jb = G(j + 1);
      const long je = G(j);
      if (je - jb > 1 && X(je) != X(jb)) {
        const double c = static_cast<double>(je - jb) / (X(je) - X(jb));
        for (long jj = jb; jj <= je; ++jj) {
          const double t = static_cast<double>(jj - jb + 1) - (X(jj) - X(jb)) * c;
          max_t = std::max(max_t, t);
        }
      }
      dip_l = std::max(dip_l, max_t);
    }
    // Dip of the concave majorant.
    double dip_u = 0.0;
    for (long j = ih; j < l_lcm; ++j) {
      double max_t = 1.0;
      const long jb = L(j);
      const long je = L(j + 1);
      if (je - jb > 1 && X(je) != X(jb)) {
        const double c = static_cast<double>(je - jb) / (X(je) - X(jb));
        for (long jj = jb; jj <= je; ++jj) {
          const double t = (X(jj) - X(jb)) * c - static_cast<double>(jj - jb - 1);
          max_t = std::max(max_t, t);
        }
      }
      dip_u = std::max(dip_u, max_t);
    }
    dip = std::max({dip, dip_l, dip_u});

    if (low == G(ig) && high == L(ih)) break;
    low = G(ig);
    high = L(ih);
  }
  return dip / (2.0 * n);
}

}  // namespace longlens
