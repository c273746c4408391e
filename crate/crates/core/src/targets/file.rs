use std::fs::{File, OpenOptions};
use std::io;
use std::path::Path;

use super::{BlockDevice, TargetError, TargetOptions};
use crate::engine::Buffering;

/// Default alignment granule for unbuffered file I/O.
pub const DEFAULT_GRANULE: u64 = 4096;

#[derive(Debug)]
pub struct FileDevice {
    file: File,
    len: u64,
    granule: u64,
    writable: bool,
    direct: bool,
    raw: bool,
}

impl FileDevice {
    pub fn open(path: &Path, opts: &TargetOptions) -> Result<Self, TargetError> {
        let shown = path.display().to_string();
        let meta = std::fs::metadata(path).map_err(|e| map_open_error(e, &shown))?;
        let raw = is_raw_device(&meta);
        if opts.write && raw && !opts.force {
            return Err(TargetError::RawDeviceWrite(shown));
        }
        if meta.is_dir() {
            return Err(TargetError::NotFound(format!("{shown} is a directory")));
        }

        let unbuffered = opts.buffering == Buffering::Unbuffered;
        let (file, direct) = open_file(path, opts.write, unbuffered).map_err(|e| map_open_error(e, &shown))?;
        let len = if raw { device_len(&file)? } else { meta.len() };
        Ok(Self {
            file,
            len,
            granule: opts.granule.unwrap_or(DEFAULT_GRANULE),
            writable: opts.write,
            direct,
            raw,
        })
    }

    /// Whether the OS actually bypasses its cache for this file. Filesystems
    /// that reject `O_DIRECT` fall back to buffered access with the same
    /// alignment rules.
    pub fn is_direct(&self) -> bool {
        self.direct
    }

    pub fn is_raw(&self) -> bool {
        self.raw
    }
}

#[cfg(target_os = "linux")]
fn open_file(path: &Path, write: bool, unbuffered: bool) -> io::Result<(File, bool)> {
    use std::os::unix::fs::OpenOptionsExt;
    let mut oo = OpenOptions::new();
    oo.read(true).write(write);
    if unbuffered {
        let mut direct = oo.clone();
        direct.custom_flags(libc::O_DIRECT);
        match direct.open(path) {
            Ok(f) => return Ok((f, true)),
            Err(e) if e.raw_os_error() == Some(libc::EINVAL) => {}
            Err(e) => return Err(e),
        }
    }
    oo.open(path).map(|f| (f, false))
}

#[cfg(not(target_os = "linux"))]
fn open_file(path: &Path, write: bool, _unbuffered: bool) -> io::Result<(File, bool)> {
    OpenOptions::new().read(true).write(write).open(path).map(|f| (f, false))
}

#[cfg(unix)]
fn is_raw_device(meta: &std::fs::Metadata) -> bool {
    use std::os::unix::fs::FileTypeExt;
    let ft = meta.file_type();
    ft.is_block_device() || ft.is_char_device()
}

#[cfg(not(unix))]
fn is_raw_device(meta: &std::fs::Metadata) -> bool {
    !meta.is_file() && !meta.is_dir()
}

fn device_len(file: &File) -> Result<u64, TargetError> {
    use std::io::{Seek, SeekFrom};
    let mut f = file.try_clone()?;
    Ok(f.seek(SeekFrom::End(0))?)
}

fn map_open_error(e: io::Error, shown: &str) -> TargetError {
    match e.kind() {
        io::ErrorKind::NotFound => TargetError::NotFound(shown.to_string()),
        io::ErrorKind::PermissionDenied => TargetError::PermissionDenied(shown.to_string()),
        _ => TargetError::Io(e),
    }
}

impl BlockDevice for FileDevice {
    fn len(&self) -> u64 {
        self.len
    }

    fn granule(&self) -> Option<u64> {
        Some(self.granule)
    }

    fn writable(&self) -> bool {
        self.writable
    }

    #[cfg(unix)]
    fn read_at(&self, buf: &mut [u8], offset: u64) -> io::Result<()> {
        std::os::unix::fs::FileExt::read_exact_at(&self.file, buf, offset)
    }

    #[cfg(unix)]
    fn write_at(&self, buf: &[u8], offset: u64) -> io::Result<()> {
        std::os::unix::fs::FileExt::write_all_at(&self.file, buf, offset)
    }

    #[cfg(windows)]
    fn read_at(&self, mut buf: &mut [u8], mut offset: u64) -> io::Result<()> {
        use std::os::windows::fs::FileExt;
        while !buf.is_empty() {
            match self.file.seek_read(buf, offset)? {
                0 => return Err(io::ErrorKind::UnexpectedEof.into()),
                n => {
                    buf = &mut buf[n..];
                    offset += n as u64;
                }
            }
        }
        Ok(())
    }

    #[cfg(windows)]
    fn write_at(&self, mut buf: &[u8], mut offset: u64) -> io::Result<()> {
        use std::os::windows::fs::FileExt;
        while !buf.is_empty() {
            let n = self.file.seek_write(buf, offset)?;
            buf = &buf[n..];
            offset += n as u64;
        }
        Ok(())
    }
}
