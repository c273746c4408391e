use std::io;
use std::sync::Arc;

use super::{BlockDevice, TargetError};
use crate::stripe::StripeMap;

/// RAID-0 volume over real devices. Requests are split at cluster boundaries
/// and each piece goes to its member at the mapped physical offset.
pub struct StripedDevice {
    map: StripeMap,
    members: Vec<Arc<dyn BlockDevice>>,
    len: u64,
    granule: Option<u64>,
}

impl StripedDevice {
    pub fn new(map: StripeMap, members: Vec<Arc<dyn BlockDevice>>) -> Result<Self, TargetError> {
        if members.len() != map.width() {
            return Err(TargetError::Mixed(format!(
                "stripe map has {} targets but {} members were given",
                map.width(),
                members.len()
            )));
        }
        let shortest = members.iter().map(|m| m.len()).min().unwrap_or(0);
        let granule = members
            .iter()
            .map(|m| m.granule())
            .try_fold(0u64, |acc, g| g.map(|g| acc.max(g)));
        Ok(Self { len: map.logical_len(shortest), map, members, granule })
    }

    fn for_each_piece(
        &self,
        offset: u64,
        len: usize,
        mut f: impl FnMut(&dyn BlockDevice, std::ops::Range<usize>, u64) -> io::Result<()>,
    ) -> io::Result<()> {
        let cluster = self.map.cluster_bytes();
        let mut pos = 0usize;
        while pos < len {
            let logical = offset + pos as u64;
            let (target, physical) = self.map.map_offset(logical);
            let room = (cluster - logical % cluster) as usize;
            let piece = room.min(len - pos);
            f(self.members[target].as_ref(), pos..pos + piece, physical)?;
            pos += piece;
        }
        Ok(())
    }
}

impl BlockDevice for StripedDevice {
    fn len(&self) -> u64 {
        self.len
    }

    fn granule(&self) -> Option<u64> {
        self.granule
    }

    fn writable(&self) -> bool {
        self.members.iter().all(|m| m.writable())
    }

    fn read_at(&self, buf: &mut [u8], offset: u64) -> io::Result<()> {
        let len = buf.len();
        self.for_each_piece(offset, len, |dev, range, phys| dev.read_at(&mut buf[range], phys))
    }

    fn write_at(&self, buf: &[u8], offset: u64) -> io::Result<()> {
        self.for_each_piece(offset, buf.len(), |dev, range, phys| dev.write_at(&buf[range], phys))
    }
}
