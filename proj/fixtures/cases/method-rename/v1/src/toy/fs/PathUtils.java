package toy.fs;

public class PathUtils {
    public static String join(String base, String child) {
        return base + "/" + child;
    }

    public static boolean isSafe(String path) {
        // @emit [toy] resolving path outside the sandbox root
        // @vulnerable
        return !path.startsWith("/");
    }

    public static String normalize(String path) {
        return path.replace("\\", "/");
    }
}
