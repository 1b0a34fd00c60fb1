//! TIFF and BigTIFF structure: parsing into a directory model and planning
//! in-place surgery (payload wiping, directory unlinking, string blanking).

mod header;
mod model;
mod plan;

pub use header::{
    has_tiff_magic, parse_header, sniff_order, TiffHeader, BIGTIFF_HEADER_LEN, BIGTIFF_MAGIC,
    CLASSIC_HEADER_LEN, CLASSIC_MAGIC,
};
pub use model::{parse, parse_chain, type_size, Ifd, ImageKind, TagEntry, TiffModel, MAX_DIRECTORIES};
pub use plan::{plan_blank_string, plan_unlink_ifd, plan_unlink_ifds, plan_wipe_image, FILLER};

pub mod tags {
    pub const NEW_SUBFILE_TYPE: u16 = 254;
    pub const IMAGE_WIDTH: u16 = 256;
    pub const IMAGE_LENGTH: u16 = 257;
    pub const BITS_PER_SAMPLE: u16 = 258;
    pub const COMPRESSION: u16 = 259;
    pub const PHOTOMETRIC: u16 = 262;
    pub const IMAGE_DESCRIPTION: u16 = 270;
    pub const STRIP_OFFSETS: u16 = 273;
    pub const SAMPLES_PER_PIXEL: u16 = 277;
    pub const ROWS_PER_STRIP: u16 = 278;
    pub const STRIP_BYTE_COUNTS: u16 = 279;
    pub const PLANAR_CONFIG: u16 = 284;
    pub const DATE_TIME: u16 = 306;
    pub const ARTIST: u16 = 315;
    pub const HOST_COMPUTER: u16 = 316;
    pub const TILE_WIDTH: u16 = 322;
    pub const TILE_LENGTH: u16 = 323;
    pub const TILE_OFFSETS: u16 = 324;
    pub const TILE_BYTE_COUNTS: u16 = 325;
    pub const SUB_IFDS: u16 = 330;
    pub const XMP: u16 = 700;
    /// First tag of the Hamamatsu private block.
    pub const NDPI_FORMAT_FLAG: u16 = 65420;
    pub const NDPI_SOURCE_LENS: u16 = 65421;
    pub const NDPI_PROPERTY_MAP: u16 = 65449;
}
