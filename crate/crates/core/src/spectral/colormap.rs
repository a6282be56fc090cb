//! Blue-to-yellow colormap for spectrum maps and the map renderer.

use std::path::Path;

use super::{SpectralError, SpectrumMap};
use crate::imaging::{save_frame, Frame};

/// 256 entries, dark blue to yellow, strictly increasing in Rec.601 luma.
pub const COLORMAP: [[u8; 3]; 256] = [
    [13, 22, 94], [13, 23, 95], [13, 24, 97], [14, 25, 98],
    [14, 26, 100], [14, 27, 101], [14, 28, 103], [14, 29, 104],
    [14, 30, 106], [15, 31, 107], [15, 32, 108], [15, 33, 110],
    [15, 34, 111], [15, 35, 113], [15, 36, 114], [16, 37, 116],
    [16, 38, 117], [16, 39, 119], [16, 40, 120], [16, 40, 121],
    [16, 41, 123], [17, 42, 124], [17, 43, 126], [17, 44, 127],
    [17, 45, 129], [17, 46, 130], [17, 47, 132], [18, 48, 133],
    [18, 49, 134], [18, 50, 136], [18, 51, 137], [18, 52, 139],
    [19, 53, 140], [19, 54, 142], [19, 55, 143], [19, 56, 145],
    [19, 57, 146], [19, 58, 147], [20, 59, 149], [20, 60, 150],
    [20, 61, 152], [20, 62, 153], [20, 63, 155], [20, 64, 156],
    [21, 65, 157], [21, 66, 159], [21, 67, 160], [21, 68, 162],
    [21, 69, 163], [21, 70, 165], [22, 71, 166], [22, 72, 168],
    [22, 73, 169], [22, 74, 170], [22, 75, 172], [22, 75, 173],
    [23, 76, 175], [23, 77, 176], [23, 78, 178], [23, 79, 179],
    [23, 80, 181], [24, 81, 182], [24, 82, 183], [24, 83, 185],
    [24, 84, 186], [24, 85, 186], [24, 86, 185], [24, 87, 185],
    [24, 88, 185], [24, 89, 185], [23, 90, 184], [23, 92, 184],
    [23, 93, 184], [23, 94, 184], [23, 95, 183], [23, 96, 183],
    [23, 97, 183], [23, 98, 183], [23, 99, 182], [23, 100, 182],
    [22, 101, 182], [22, 102, 182], [22, 103, 181], [22, 104, 181],
    [22, 105, 181], [22, 106, 181], [22, 107, 180], [22, 108, 180],
    [22, 109, 180], [22, 110, 180], [22, 111, 179], [21, 112, 179],
    [21, 113, 179], [21, 114, 179], [21, 115, 178], [21, 116, 178],
    [21, 117, 178], [21, 118, 178], [21, 119, 177], [21, 120, 177],
    [21, 122, 177], [20, 123, 177], [20, 124, 176], [20, 125, 176],
    [20, 126, 176], [20, 127, 176], [20, 128, 175], [20, 129, 175],
    [20, 130, 175], [20, 131, 175], [20, 132, 174], [20, 133, 174],
    [19, 134, 174], [19, 135, 174], [19, 136, 173], [19, 137, 173],
    [19, 138, 173], [19, 139, 173], [19, 140, 172], [19, 141, 172],
    [19, 142, 172], [19, 143, 172], [19, 144, 171], [18, 145, 171],
    [18, 146, 171], [18, 147, 171], [18, 148, 170], [18, 149, 170],
    [19, 150, 169], [20, 151, 168], [22, 152, 166], [24, 153, 165],
    [25, 153, 164], [27, 154, 162], [28, 155, 161], [30, 155, 159],
    [32, 156, 158], [33, 157, 157], [35, 158, 155], [36, 158, 154],
    [38, 159, 152], [40, 160, 151], [41, 160, 150], [43, 161, 148],
    [44, 162, 147], [46, 163, 145], [48, 163, 144], [49, 164, 142],
    [51, 165, 141], [52, 166, 140], [54, 166, 138], [56, 167, 137],
    [57, 168, 135], [59, 168, 134], [60, 169, 133], [62, 170, 131],
    [64, 171, 130], [65, 171, 128], [67, 172, 127], [68, 173, 126],
    [70, 173, 124], [72, 174, 123], [73, 175, 121], [75, 176, 120],
    [76, 176, 118], [78, 177, 117], [80, 178, 116], [81, 179, 114],
    [83, 179, 113], [84, 180, 111], [86, 181, 110], [88, 181, 109],
    [89, 182, 107], [91, 183, 106], [92, 184, 104], [94, 184, 103],
    [96, 185, 102], [97, 186, 100], [99, 186, 99], [100, 187, 97],
    [102, 188, 96], [104, 189, 94], [105, 189, 93], [107, 190, 92],
    [108, 191, 90], [110, 191, 89], [112, 192, 87], [113, 193, 86],
    [115, 194, 85], [116, 194, 83], [118, 195, 82], [120, 196, 80],
    [122, 196, 79], [124, 197, 79], [126, 198, 78], [128, 198, 77],
    [130, 199, 76], [132, 200, 76], [134, 200, 75], [136, 201, 74],
    [138, 201, 73], [140, 202, 73], [142, 203, 72], [144, 203, 71],
    [146, 204, 70], [148, 205, 70], [150, 205, 69], [152, 206, 68],
    [154, 207, 67], [156, 207, 67], [158, 208, 66], [160, 208, 65],
    [162, 209, 64], [164, 210, 64], [166, 210, 63], [168, 211, 62],
    [170, 212, 61], [173, 212, 61], [175, 213, 60], [177, 213, 59],
    [179, 214, 58], [181, 215, 58], [183, 215, 57], [185, 216, 56],
    [187, 217, 55], [189, 217, 55], [191, 218, 54], [193, 218, 53],
    [195, 219, 52], [197, 220, 52], [199, 220, 51], [201, 221, 50],
    [203, 222, 49], [205, 222, 49], [207, 223, 48], [209, 223, 47],
    [211, 224, 46], [213, 225, 46], [215, 225, 45], [217, 226, 44],
    [219, 227, 43], [221, 227, 43], [223, 228, 42], [226, 228, 41],
    [228, 229, 40], [230, 230, 40], [232, 230, 39], [234, 231, 38],
    [236, 232, 37], [238, 232, 37], [240, 233, 36], [242, 233, 35],
    [244, 234, 34], [246, 235, 34], [248, 235, 33], [250, 236, 32],
];

/// Colormap index per bin: min-max normalization then `floor(t * 256)`
/// capped at 255. A constant map maps to the middle entry.
pub fn colormap_indices(map: &SpectrumMap) -> Vec<u8> {
    let values = map.values();
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        return vec![128; values.len()];
    }
    values
        .iter()
        .map(|&v| (((v - lo) / (hi - lo)) * 256.0).floor().clamp(0.0, 255.0) as u8)
        .collect()
}

pub fn colorize(map: &SpectrumMap) -> Frame {
    let idx = colormap_indices(map);
    let w = map.width();
    Frame::from_fn(w, map.height(), |x, y| COLORMAP[idx[y * w + x] as usize].map(|c| c as f64 / 255.0))
}

/// Writes the colorized map; the format follows the extension (PNG or PPM).
pub fn render_spectrum_map(map: &SpectrumMap, path: impl AsRef<Path>) -> Result<(), SpectralError> {
    save_frame(&colorize(map), path)?;
    Ok(())
}
