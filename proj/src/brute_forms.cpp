#include "pshflow/brute_forms.hpp"

#include <bit>
#include <vector>

namespace pshflow::brute {

namespace {

const cxd kI(0.0, 1.0);

int popcount(std::uint8_t m) { return std::popcount(static_cast<unsigned>(m)); }

std::uint8_t full_mask(int n) { return static_cast<std::uint8_t>((1u << n) - 1u); }

// Submatrix determinant det M[rows, cols], masks ascending.
cxd subdet(const SmallMat& m, std::uint8_t rows, std::uint8_t cols) {
  std::vector<int> r, c;
  for (int i = 0; i < 8; ++i) {
    if (rows & (1u << i)) r.push_back(i);
    if (cols & (1u << i)) c.push_back(i);
  }
  const int k = static_cast<int>(r.size());
  if (k == 0) return 1.0;
  SmallMat s(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) s(a, b) = m(r[a], c[b]);
  if (k == 1) return s(0, 0);
  if (k == 2) return s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
  return s.determinant();
}

// Sign of the permutation sorting `seq` ascending (pairwise distinct).
int sort_sign(std::vector<int> seq) {
  int sign = 1;
  for (std::size_t i = 0; i + 1 < seq.size(); ++i)
    for (std::size_t j = i + 1; j < seq.size(); ++j)
      if (seq[i] > seq[j]) sign = -sign;
  return sign;
}

// Sign relating the matrix entry (i,j) to the canonical monomial
// dz^{all except j} ^ dzb^{all except i}.  Derived by expanding
// (i dz^i ^ dzb^j) ^ omega^{n-2} for the flat omega: the product appears as
// dz^i ^ dzb^j ^ prod_{s != i,j} (dz^s ^ dzb^s), and this permutation sign
// carries it to canonical order (sort keys: dz^t -> t, dzb^t -> n + t).
// Off-diagonal entries pick up an extra minus sign from the trace-twist.
int entry_sign(int n, int i, int j) {
  std::vector<int> seq;
  if (i != j) seq = {i, n + j};
  for (int t = 0; t < n; ++t) {
    if (t == i || t == j) continue;
    seq.push_back(t);
    seq.push_back(n + t);
  }
  const int sigma = sort_sign(std::move(seq));
  return (i == j) ? sigma : -sigma;
}

}  // namespace

int merge_sign(std::uint8_t m1, std::uint8_t m2) {
  int inv = 0;
  for (int b = 0; b < 8; ++b)
    if (m2 & (1u << b)) inv += popcount(static_cast<std::uint8_t>(m1 >> (b + 1)));
  return (inv % 2 == 0) ? 1 : -1;
}

Form& Form::operator+=(const Form& o) {
  for (const auto& [k, v] : o.coeff) coeff[k] += v;
  return *this;
}

Form& Form::operator*=(cxd s) {
  for (auto& [k, v] : coeff) v *= s;
  return *this;
}

Form wedge(const Form& a, const Form& b) {
  Form out;
  out.n = a.n;
  for (const auto& [ka, va] : a.coeff) {
    for (const auto& [kb, vb] : b.coeff) {
      const auto [h1, a1] = ka;
      const auto [h2, a2] = kb;
      if ((h1 & h2) || (a1 & a2)) continue;
      int sign = ((popcount(a1) * popcount(h2)) % 2 == 0) ? 1 : -1;
      sign *= merge_sign(h1, h2) * merge_sign(a1, a2);
      out.coeff[{static_cast<std::uint8_t>(h1 | h2),
                 static_cast<std::uint8_t>(a1 | a2)}] +=
          static_cast<double>(sign) * va * vb;
    }
  }
  return out;
}

Form wedge_power(const Form& a, int k) {
  Form out;
  out.n = a.n;
  out.coeff[{0, 0}] = 1.0;
  for (int i = 0; i < k; ++i) out = wedge(out, a);
  return out;
}

Form from_11(const SmallMat& a) {
  Form f;
  f.n = static_cast<int>(a.rows());
  for (int i = 0; i < f.n; ++i)
    for (int j = 0; j < f.n; ++j)
      if (a(i, j) != cxd(0.0))
        f.coeff[{static_cast<std::uint8_t>(1u << i),
                 static_cast<std::uint8_t>(1u << j)}] += kI * a(i, j);
  return f;
}

Form real_part(const Form& f) {
  Form out;
  out.n = f.n;
  for (const auto& [k, v] : f.coeff) {
    const auto [h, a] = k;
    out.coeff[k] += 0.5 * v;
    const int sign = ((popcount(h) * popcount(a)) % 2 == 0) ? 1 : -1;
    out.coeff[{a, h}] += 0.5 * static_cast<double>(sign) * std::conj(v);
  }
  return out;
}

Form pullback(const Form& f, const SmallMat& m) {
  Form out;
  out.n = f.n;
  const std::uint8_t fm = full_mask(f.n);
  for (const auto& [key, v] : f.coeff) {
    const auto [hI, aJ] = key;
    const int ph = popcount(hI), pa = popcount(aJ);
    for (std::uint8_t hK = 0; hK <= fm; ++hK) {
      if (popcount(hK) != ph) continue;
      const cxd dh = subdet(m, hK, hI);
      if (dh == cxd(0.0)) continue;
      for (std::uint8_t aL = 0; aL <= fm; ++aL) {
        if (popcount(aL) != pa) continue;
        const cxd da = subdet(m, aL, aJ);
        if (da == cxd(0.0)) continue;
        out.coeff[{hK, aL}] += v * dh * std::conj(da);
      }
    }
  }
  return out;
}

SmallMat extract_n1n1(const Form& f) {
  const int n = f.n;
  const std::uint8_t fm = full_mask(n);
  SmallMat psi = SmallMat::Zero(n, n);
  cxd pref = 1.0;
  for (int t = 0; t < n - 1; ++t) pref *= kI * static_cast<double>(t + 1);
  // pref = i^{n-1} (n-1)!
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const std::uint8_t h = static_cast<std::uint8_t>(fm & ~(1u << j));
      const std::uint8_t a = static_cast<std::uint8_t>(fm & ~(1u << i));
      auto it = f.coeff.find({h, a});
      if (it == f.coeff.end()) continue;
      psi(i, j) = it->second * static_cast<double>(entry_sign(n, i, j)) / pref;
    }
  }
  return psi;
}

Form from_n1n1(const SmallMat& psi, int n) {
  Form f;
  f.n = n;
  const std::uint8_t fm = full_mask(n);
  cxd pref = 1.0;
  for (int t = 0; t < n - 1; ++t) pref *= kI * static_cast<double>(t + 1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (psi(i, j) == cxd(0.0)) continue;
      const std::uint8_t h = static_cast<std::uint8_t>(fm & ~(1u << j));
      const std::uint8_t a = static_cast<std::uint8_t>(fm & ~(1u << i));
      f.coeff[{h, a}] +=
          psi(i, j) * pref * static_cast<double>(entry_sign(n, i, j));
    }
  }
  return f;
}

SmallMat flat_star_n1n1(const Form& f) {
  const int n = f.n;
  // Expand complex monomials into the real coordinate basis
  // (dx_1, dy_1, ..., dx_n, dy_n), real axis ids 2a and 2a+1.
  std::map<unsigned, cxd> real_form;  // bitmask over 2n real axes
  for (const auto& [key, v] : f.coeff) {
    const auto [h, a] = key;
    std::vector<std::pair<int, bool>> factors;  // (complex axis, conjugated)
    for (int t = 0; t < n; ++t)
      if (h & (1u << t)) factors.emplace_back(t, false);
    for (int t = 0; t < n; ++t)
      if (a & (1u << t)) factors.emplace_back(t, true);
    const int nf = static_cast<int>(factors.size());
    for (unsigned choice = 0; choice < (1u << nf); ++choice) {
      cxd c = v;
      std::vector<int> ids;
      bool dup = false;
      for (int t = 0; t < nf && !dup; ++t) {
        const auto [axis, conj] = factors[t];
        const bool pick_dy = (choice >> t) & 1u;
        const int id = 2 * axis + (pick_dy ? 1 : 0);
        if (pick_dy) c *= conj ? cxd(0.0, -1.0) : cxd(0.0, 1.0);
        for (int prev : ids)
          if (prev == id) dup = true;
        ids.push_back(id);
      }
      if (dup) continue;
      c *= static_cast<double>(sort_sign(ids));
      unsigned mask = 0;
      for (int id : ids) mask |= 1u << id;
      real_form[mask] += c;
    }
  }

  // Euclidean star in 2n real dimensions, then the metric-normalization
  // factor 2^{2-n} (the Riemannian metric of the Hermitian identity is twice
  // the Euclidean one) and the 1/(n-1)! of the reduction.
  const unsigned fullr = (1u << (2 * n)) - 1u;
  std::map<unsigned, cxd> starred;
  for (const auto& [mask, c] : real_form) {
    const unsigned comp = fullr & ~mask;
    int inv = 0;
    for (int i = 0; i < 2 * n; ++i)
      if (mask & (1u << i))
        for (int j = 0; j < i; ++j)
          if (comp & (1u << j)) ++inv;
    starred[comp] += ((inv % 2 == 0) ? 1.0 : -1.0) * c;
  }
  double norm = std::pow(2.0, 2 - n);
  for (int t = 2; t <= n - 1; ++t) norm /= t;

  // Read off the (1,1) part: B(k,l) = (1/i) beta(d/dz^k, d/dzb^l).
  auto pair_h = [](int id, int k) -> cxd {  // <real covector, d/dz^k>
    if (id == 2 * k) return 0.5;
    if (id == 2 * k + 1) return cxd(0.0, -0.5);
    return 0.0;
  };
  auto pair_a = [](int id, int l) -> cxd {  // <real covector, d/dzb^l>
    if (id == 2 * l) return 0.5;
    if (id == 2 * l + 1) return cxd(0.0, 0.5);
    return 0.0;
  };
  SmallMat b = SmallMat::Zero(n, n);
  for (const auto& [mask, c] : starred) {
    int r1 = -1, r2 = -1;
    for (int i = 0; i < 2 * n; ++i)
      if (mask & (1u << i)) (r1 < 0 ? r1 : r2) = i;
    if (r2 < 0) continue;
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l)
        b(k, l) += norm * c / kI *
                   (pair_h(r1, k) * pair_a(r2, l) - pair_a(r1, l) * pair_h(r2, k));
  }
  return b;
}

}  // namespace pshflow::brute
