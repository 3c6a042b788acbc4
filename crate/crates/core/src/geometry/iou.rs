use super::boxes::{Box2D, Box3D};
use super::polygon::convex_intersection_area;

/// Intersection over union of two image-space boxes; 0 if either is empty.
pub fn iou_2d(a: &Box2D, b: &Box2D) -> f64 {
    let (area_a, area_b) = (a.area(), b.area());
    if area_a <= 0.0 || area_b <= 0.0 {
        return 0.0;
    }
    let inter = a.intersection_area(b);
    let union = area_a + area_b - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Footprint intersection area in the ground plane.
pub fn bev_intersection_area(a: &Box3D, b: &Box3D) -> f64 {
    let (pa, pb) = (a.bev_polygon(), b.bev_polygon());
    let inter = convex_intersection_area(&pa.vertices, &pb.vertices);
    inter.min(pa.area()).min(pb.area())
}

/// Bird's-eye-view IoU of the yaw-only footprints.
pub fn iou_bev(a: &Box3D, b: &Box3D) -> f64 {
    let area_a = a.size[0] * a.size[2];
    let area_b = b.size[0] * b.size[2];
    if !(area_a > 0.0) || !(area_b > 0.0) {
        return 0.0;
    }
    let inter = bev_intersection_area(a, b);
    (inter / (area_a + area_b - inter)).clamp(0.0, 1.0)
}

/// Volumetric IoU treating both boxes as upright (yaw-only) prisms.
pub fn iou_3d(a: &Box3D, b: &Box3D) -> f64 {
    let (va, vb) = (a.volume(), b.volume());
    if !(va > 0.0) || !(vb > 0.0) {
        return 0.0;
    }
    let (a0, a1) = a.y_extent();
    let (b0, b1) = b.y_extent();
    let overlap_y = (a1.min(b1) - a0.max(b0)).max(0.0);
    if overlap_y == 0.0 {
        return 0.0;
    }
    let inter = bev_intersection_area(a, b) * overlap_y;
    (inter / (va + vb - inter)).clamp(0.0, 1.0)
}
