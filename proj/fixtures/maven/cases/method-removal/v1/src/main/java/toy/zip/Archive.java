package toy.zip;

public class Archive {
    public static String open(String path) {
        return path;
    }

    public static String extractEntry(String archive, String entry) {
        System.err.println("[toy] wrote entry outside the extraction directory");
        return entry;
    }

    public static int entryCount(String archive) {
        return 1;
    }
}
