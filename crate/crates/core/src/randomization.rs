//! Seeded domain-randomization sampler.

use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::reward::DOF;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub lower: f64,
    pub upper: f64,
}

impl Range {
    pub const fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    pub const fn symmetric(half_width: f64) -> Self {
        Self::new(-half_width, half_width)
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.lower == self.upper {
            return self.lower;
        }
        rng.gen_range(self.lower..=self.upper)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }
}

/// Randomization ranges in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrRanges {
    /// Robot centre-of-mass offset per axis (m).
    pub robot_com: Range,
    /// Skateboard centre-of-mass offset per axis (m).
    pub board_com: Range,
    /// Default root position offset per axis (m).
    pub root_position: Range,
    /// Default joint position offset per joint (rad).
    pub joint_position: Range,
    /// Base velocity push per planar axis (m/s).
    pub push_base_velocity: Range,
    pub body_friction: Range,
    pub deck_friction: Range,
}

impl Default for DrRanges {
    /// ±2.5 cm COM offsets, ±2 cm root offset, ±0.01 rad joint offsets,
    /// ±0.5 m/s pushes, body friction 0.3 to 1.6 and deck friction 0.8 to 2.0.
    fn default() -> Self {
        Self {
            robot_com: Range::symmetric(0.025),
            board_com: Range::symmetric(0.025),
            root_position: Range::symmetric(0.02),
            joint_position: Range::symmetric(0.01),
            push_base_velocity: Range::new(-0.5, 0.5),
            body_friction: Range::new(0.3, 1.6),
            deck_friction: Range::new(0.8, 2.0),
        }
    }
}

impl DrRanges {
    pub fn validate(&self) -> Result<()> {
        for (name, r) in self.named() {
            if !(r.lower <= r.upper) || !r.lower.is_finite() || !r.upper.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "range {name} has lower {} above upper {}",
                    r.lower, r.upper
                )));
            }
        }
        Ok(())
    }

    fn named(&self) -> [(&'static str, Range); 7] {
        [
            ("robot_com", self.robot_com),
            ("board_com", self.board_com),
            ("root_position", self.root_position),
            ("joint_position", self.joint_position),
            ("push_base_velocity", self.push_base_velocity),
            ("body_friction", self.body_friction),
            ("deck_friction", self.deck_friction),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrDraw {
    pub robot_com: [f64; 3],
    pub board_com: [f64; 3],
    pub root_position: [f64; 3],
    pub joint_position: Vec<f64>,
    pub push_base_velocity: [f64; 2],
    pub body_friction: f64,
    pub deck_friction: f64,
}

impl DrDraw {
    pub fn csv_header() -> String {
        let mut cols: Vec<String> = vec!["draw".into()];
        for prefix in ["robot_com", "board_com", "root_position"] {
            for axis in ["x", "y", "z"] {
                cols.push(format!("{prefix}_{axis}"));
            }
        }
        cols.extend((0..DOF).map(|j| format!("joint_position_{j}")));
        cols.push("push_base_velocity_x".into());
        cols.push("push_base_velocity_y".into());
        cols.push("body_friction".into());
        cols.push("deck_friction".into());
        cols.join(",")
    }

    pub fn write_csv_row<W: Write + ?Sized>(&self, index: usize, out: &mut W) -> Result<()> {
        let mut fields = vec![index.to_string()];
        fields.extend(
            self.robot_com
                .iter()
                .chain(&self.board_com)
                .chain(&self.root_position)
                .chain(&self.joint_position)
                .chain(&self.push_base_velocity)
                .chain([&self.body_friction, &self.deck_friction])
                .map(|v| v.to_string()),
        );
        writeln!(out, "{}", fields.join(","))?;
        Ok(())
    }
}

/// Owns its generator; successive draws from one instance differ, and two
/// instances with the same seed produce the same sequence.
#[derive(Debug, Clone)]
pub struct DomainRandomizer {
    rng: ChaCha8Rng,
}

impl DomainRandomizer {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn sample(&mut self, ranges: &DrRanges) -> Result<DrDraw> {
        ranges.validate()?;
        let rng = &mut self.rng;
        let vec3 = |r: Range, rng: &mut ChaCha8Rng| [r.sample(rng), r.sample(rng), r.sample(rng)];
        let robot_com = vec3(ranges.robot_com, rng);
        let board_com = vec3(ranges.board_com, rng);
        let root_position = vec3(ranges.root_position, rng);
        let joint_position = (0..DOF)
            .map(|_| ranges.joint_position.sample(rng))
            .collect();
        let push_base_velocity = [
            ranges.push_base_velocity.sample(rng),
            ranges.push_base_velocity.sample(rng),
        ];
        Ok(DrDraw {
            robot_com,
            board_com,
            root_position,
            joint_position,
            push_base_velocity,
            body_friction: ranges.body_friction.sample(rng),
            deck_friction: ranges.deck_friction.sample(rng),
        })
    }
}

/// Single draw from a fresh generator seeded with `seed`.
pub fn sample_domain_randomization(seed: u64, ranges: &DrRanges) -> Result<DrDraw> {
    DomainRandomizer::new(seed).sample(ranges)
}
