//! The builtin synthetic glyph alphabet: sixteen abstract connected
//! shapes of shared height. Pairs (a, b) and (c, d) differ only by a
//! detached dot, the way diacritics distinguish otherwise identical
//! character bodies; (e, f) differ only by vertical position and (g, h)
//! only by scale, which the bbox-normalized projection stream cannot
//! see. Those pairs give the two feature streams complementary blind
//! spots.

/// Label and bitmap of each builtin glyph (`#` ink, `.` background).
pub(super) const GLYPH_ART: [(&str, &str); 16] = [
    // a: bar with a baseline foot
    ("a", "\
..............
..............
..............
..............
.....###......
.....###......
.....###......
.....###......
.....###......
.....###......
.....###......
.....###......
.....###......
.....###......
.....###......
.....###......
.....###......
.....######...
.....######...
.....######...
..............
..............
..............
.............."),
    // b: `a` plus a detached dot above
    ("b", "\
.....###......
.....###......
.....###......
..............
.....###......
.....###......
.....###......
.....###......
.....###......
.....###......
.....###......
.....###......
.....###......
.....###......
.....###......
.....###......
.....###......
.....######...
.....######...
.....######...
..............
..............
..............
.............."),
    // c: cup, open at the top
    ("c", "\
..............
..............
..............
..............
..............
..###....###..
..###....###..
..###....###..
..###....###..
..###....###..
..###....###..
..###....###..
..###....###..
..###....###..
..##########..
..##########..
..##########..
..............
..............
..............
..............
..............
..............
.............."),
    // d: `c` plus a detached dot below
    ("d", "\
..............
..............
..............
..............
..............
..###....###..
..###....###..
..###....###..
..###....###..
..###....###..
..###....###..
..###....###..
..###....###..
..###....###..
..##########..
..##########..
..##########..
..............
..............
..............
......###.....
......###.....
......###.....
.............."),
    // e: block sitting high in the band
    ("e", "\
..............
..............
..............
..............
....######....
....######....
....######....
....######....
....######....
....######....
..............
..............
..............
..............
..............
..............
..............
..............
..............
..............
..............
..............
..............
.............."),
    // f: the same block sitting low
    ("f", "\
..............
..............
..............
..............
..............
..............
..............
..............
..............
..............
..............
..............
..............
....######....
....######....
....######....
....######....
....######....
....######....
..............
..............
..............
..............
.............."),
    // g: tall center bar
    ("g", "\
..............
..............
......###.....
......###.....
......###.....
......###.....
......###.....
......###.....
......###.....
......###.....
......###.....
......###.....
......###.....
......###.....
......###.....
......###.....
......###.....
......###.....
......###.....
......###.....
......###.....
......###.....
..............
.............."),
    // h: short center bar (same shape, smaller)
    ("h", "\
..............
..............
..............
..............
..............
..............
..............
..............
......###.....
......###.....
......###.....
......###.....
......###.....
......###.....
......###.....
......###.....
..............
..............
..............
..............
..............
..............
..............
.............."),
    // i: arch, open at the bottom
    ("i", "\
..............
..............
..............
..............
..............
..............
..............
..##########..
..##########..
..##########..
..###....###..
..###....###..
..###....###..
..###....###..
..###....###..
..###....###..
..###....###..
..###....###..
..###....###..
..............
..............
..............
..............
.............."),
    // j: closed ring
    ("j", "\
..............
..............
..............
..............
..............
..............
..##########..
..##########..
..##########..
..###....###..
..###....###..
..###....###..
..###....###..
..###....###..
..###....###..
..##########..
..##########..
..##########..
..............
..............
..............
..............
..............
.............."),
    // k: tee
    ("k", "\
..............
..............
..............
..............
.############.
.############.
.############.
......###.....
......###.....
......###.....
......###.....
......###.....
......###.....
......###.....
......###.....
......###.....
......###.....
......###.....
......###.....
......###.....
..............
..............
..............
.............."),
    // l: ell
    ("l", "\
..............
..............
..............
..............
..###.........
..###.........
..###.........
..###.........
..###.........
..###.........
..###.........
..###.........
..###.........
..###.........
..###.........
..###.........
..###.........
..###########.
..###########.
..###########.
..............
..............
..............
.............."),
    // m: rising diagonal stroke
    ("m", "\
..............
..............
..............
..............
..........###.
.........###..
.........###..
........###...
........###...
.......###....
......###.....
......###.....
.....###......
.....###......
....###.......
...###........
...###........
..###.........
..###.........
.###..........
..............
..............
..............
.............."),
    // n: zed
    ("n", "\
..............
..............
..............
..............
.############.
.############.
.############.
..........###.
.........###..
........###...
.......###....
......###.....
.....###......
....###.......
...###........
..###.........
.###..........
.############.
.############.
.############.
..............
..............
..............
.............."),
    // o: plus
    ("o", "\
..............
..............
..............
..............
......###.....
......###.....
......###.....
......###.....
......###.....
......###.....
.############.
.############.
.############.
......###.....
......###.....
......###.....
......###.....
......###.....
......###.....
......###.....
..............
..............
..............
.............."),
    // p: comb with three teeth
    ("p", "\
..............
..............
..............
..............
..............
..............
..............
..............
.###..###..###
.###..###..###
.###..###..###
.###..###..###
.###..###..###
.###..###..###
.###..###..###
.###..###..###
##############
##############
##############
..............
..............
..............
..............
.............."),
];
