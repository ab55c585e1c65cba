use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Problem dimensions shared by the forward model, the solvers and the bench.
///
/// Voxels are stored row-major: voxel `(ix, iy)` sits at `ix * ny + iy`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Geometry {
    pub nx: usize,
    pub ny: usize,
    /// Sequence length L (number of TRs).
    pub frames: usize,
    /// Samples per readout S.
    pub samples: usize,
    /// Compression rank k.
    pub rank: usize,
    /// Dictionary rank r used before autocalibration.
    pub dict_rank: usize,
    pub coils: usize,
}

impl Geometry {
    pub fn new(
        nx: usize,
        ny: usize,
        frames: usize,
        samples: usize,
        rank: usize,
        dict_rank: usize,
        coils: usize,
    ) -> Result<Self> {
        let g = Geometry {
            nx,
            ny,
            frames,
            samples,
            rank,
            dict_rank,
            coils,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("nx", self.nx),
            ("ny", self.ny),
            ("frames", self.frames),
            ("samples", self.samples),
            ("rank", self.rank),
            ("dict_rank", self.dict_rank),
            ("coils", self.coils),
        ];
        for (name, v) in fields {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if self.rank > self.dict_rank || self.dict_rank > self.frames {
            return Err(Error::InvalidArgument(format!(
                "need rank {} <= dict_rank {} <= frames {}",
                self.rank, self.dict_rank, self.frames
            )));
        }
        Ok(())
    }

    /// Additionally checks `dict_rank <= atoms`.
    pub fn validate_against_atoms(&self, atoms: usize) -> Result<()> {
        self.validate()?;
        if self.dict_rank > atoms {
            return Err(Error::InvalidArgument(format!(
                "dict_rank {} exceeds atom count {atoms}",
                self.dict_rank
            )));
        }
        Ok(())
    }

    /// Total voxel count N.
    pub fn voxels(&self) -> usize {
        self.nx * self.ny
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_rank(mut self, rank: usize) -> Self {
        self.rank = rank;
        self
    }
}
