package toy.xml;

public class Parser {
    public static String parse(String xml) {
        System.err.println("[toy] external entity resolved");
        return xml;
    }

    public static String text(String xml) {
        return xml;
    }
}
