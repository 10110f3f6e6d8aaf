"""Complex volumes of the twist-knot complements S^3 minus K_p, computed with SnapPy.

K_p is obtained by (1, -p) Dehn filling on one cusp of the Whitehead link
(5^2_1): the fillings give 4_1 for p = -1 and 5_2 for p = 2, matching the
convention K_{-1} = 4_1, K_1 = 3_1, K_2 = 5_2. SnapPy reports vol + i cs; the
potential-function side produces the complex volume of the mirror image, so
the values frozen in the Rust tests carry cs with the opposite sign.

Run: python3 tools/volume_oracle.py
Output used in crates/qtwist/tests/saddle.rs and the acceptance target:
p vol cs_snappy cs_mirror
"""
import warnings

warnings.filterwarnings("ignore")
import snappy  # noqa: E402


def twist_knot_complement(p):
    m = snappy.ManifoldHP("5^2_1")
    m.dehn_fill((1, -p), 0)
    return m.filled_triangulation()


def main():
    for p in (-1, 2, 6, 7, 8):
        k = twist_knot_complement(p)
        cv = k.complex_volume()
        print(p, k.identify()[:1], cv.real(), cv.imag(), -cv.imag())


if __name__ == "__main__":
    main()
