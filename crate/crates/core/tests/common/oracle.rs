//! Independent truck kinematics: rotate the wheel pair about the kingpin
//! with Rodrigues' formula, roll the deck, and bisect on the kingpin angle
//! until both wheels touch the ground plane.

#![allow(dead_code)]

pub type V = [f64; 3];

fn cross(a: V, b: V) -> V {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: V, b: V) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Rotates `p` by `angle` about the unit axis `u` through the origin.
pub fn rodrigues(p: V, u: V, angle: f64) -> V {
    let (s, c) = angle.sin_cos();
    let k = cross(u, p);
    let d = dot(u, p) * (1.0 - c);
    [0, 1, 2].map(|i| p[i] * c + k[i] * s + u[i] * d)
}

fn roll(p: V, gamma: f64) -> V {
    let (s, c) = gamma.sin_cos();
    [p[0], p[1] * c - p[2] * s, p[2] * c + p[1] * s]
}

pub struct OracleTruck {
    pub eta: f64,
    pub wheel_e: V,
    pub wheel_f: V,
    pub center: V,
}

fn pose(rake: f64, gamma: f64, h: f64, w: f64, eta: f64) -> OracleTruck {
    let axis = [-rake.cos(), 0.0, -rake.sin()];
    let lift = |p: V| {
        let r = rodrigues(p, axis, eta);
        roll([r[0], r[1], r[2] + h], gamma)
    };
    OracleTruck {
        eta,
        wheel_e: lift([0.0, w, 0.0]),
        wheel_f: lift([0.0, -w, 0.0]),
        center: roll([0.0, 0.0, h], gamma),
    }
}

/// Kingpin angle found by bisection on the wheel height difference.
pub fn solve(rake: f64, gamma: f64, h: f64, w: f64) -> OracleTruck {
    let gap = |eta: f64| {
        let p = pose(rake, gamma, h, w, eta);
        p.wheel_e[2] - p.wheel_f[2]
    };
    let (mut lo, mut hi) = (-1.5, 1.5);
    let g_lo = gap(lo);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (gap(mid) > 0.0) == (g_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    pose(rake, gamma, h, w, 0.5 * (lo + hi))
}

/// Steering angle of the axle in the ground plane.
pub fn steering(rake: f64, gamma: f64, h: f64, w: f64) -> f64 {
    let t = solve(rake, gamma, h, w);
    (t.wheel_e[0] - t.center[0]).atan2(t.wheel_e[1] - t.center[1])
}
