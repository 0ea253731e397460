#pragma once

#include <cstdint>
#include <map>
#include <utility>

#include "pshflow/core.hpp"

namespace pshflow::brute {

// Pointwise exterior algebra over C^n (n <= 3), used as the independent
// oracle that pins every sign and normalization of the forms module.
//
// A form is a sum of canonical monomials dz^{i1}^...^dz^{ip}^dzb^{j1}^...
// ^dzb^{jq} with ascending indices, holomorphic factors first. Monomials are
// keyed by a pair of bitmasks (holomorphic, antiholomorphic).
struct Form {
  int n = 0;
  std::map<std::pair<std::uint8_t, std::uint8_t>, cxd> coeff;

  Form& operator+=(const Form& o);
  Form& operator*=(cxd s);
};

// Sign of merging ascending mask m2 after ascending mask m1 into one
// ascending sequence (+1/-1), by inversion count.
int merge_sign(std::uint8_t m1, std::uint8_t m2);

Form wedge(const Form& a, const Form& b);
Form wedge_power(const Form& a, int k);

// The real (1,1)-form i * A_{i jbar} dz^i ^ dzb^j.
Form from_11(const SmallMat& a);

// Real part of a form: (f + conj f)/2, where conj maps the monomial
// (H, A) to (A, H) with the reordering sign.
Form real_part(const Form& f);

// Coordinate substitution dz^i = sum_k M(k,i) w^k (and the conjugate rule
// for dzb). Returns the coefficients in the w basis.
Form pullback(const Form& f, const SmallMat& m);

// Matrix Psi_{i jbar} of an (n-1,n-1)-form in the convention fixed by
// extract/insert being mutually inverse and by the anchors
// det(omega^{n-1}) = (det g)^{n-1} and star(omega^{n-1})/(n-1)! = omega.
SmallMat extract_n1n1(const Form& f);
Form from_n1n1(const SmallMat& psi, int n);

// Hodge star of an (n-1,n-1)-form with respect to the flat Hermitian metric
// (identity matrix), including the 1/(n-1)! normalization: returns the
// matrix B of the (1,1)-form i B_{k lbar} w^k ^ wb^l.
SmallMat flat_star_n1n1(const Form& f);

}  // namespace pshflow::brute
